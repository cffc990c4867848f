//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain failure (failed check, solver or step
//! failure, I/O), 2 usage or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use alarmtaxis_core::steady::{solve_steady_state_with, steady_j, SolverOptions};
use alarmtaxis_core::{fit_decay, steady_state_residual, validate_hypothesis, Window};
use clap::{Parser, Subcommand};

use crate::config::{parse_override, ConfigError, ExperimentConfig};
use crate::output::{read_timeseries, TIMESERIES_FILE};
use crate::runner::simulate;
use crate::sweep::run_sweep;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "alarmtaxis",
    version,
    about = "Simulate and analyse the three-species alarm-taxis system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set params.chi=0.1`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; defaults to `output.dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print only errors.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the parameter hypotheses and the stability condition.
    CheckParams,
    /// Solve for the coexistence steady state.
    SteadyState,
    /// Run one simulation into a run directory.
    Simulate,
    /// Fit exponential decay to a run's time series.
    FitDecay {
        /// Run directory or time-series CSV; defaults to `--out`.
        run: Option<PathBuf>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
    },
    /// Run every point of the config's [sweep] table.
    Sweep {
        /// Worker threads; defaults to the number of available processors.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    quiet: bool,
}

macro_rules! say {
    ($io:expr, $($arg:tt)*) => {
        if !$io.quiet {
            let _ = writeln!($io.out, $($arg)*);
        }
    };
}

macro_rules! complain {
    ($io:expr, $($arg:tt)*) => {{
        let _ = writeln!($io.err, $($arg)*);
    }};
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let mut io = Io {
        out,
        err,
        quiet: cli.quiet,
    };
    match dispatch(&cli, &mut io) {
        Ok(code) => code,
        Err(e) => {
            complain!(io, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let overrides = cli
        .set
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    let path = cli
        .config
        .as_deref()
        .ok_or(ConfigError::Syntax("--config is required".into()))?;
    ExperimentConfig::load(path, &overrides)
}

fn out_dir(cli: &Cli, config: &ExperimentConfig) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| config.output.dir.clone())
}

/// Config errors bubble up as `Err` (exit 2); everything else picks its code.
fn dispatch(cli: &Cli, io: &mut Io) -> Result<i32, ConfigError> {
    match &cli.command {
        Command::CheckParams => check_params(&load(cli)?, io),
        Command::SteadyState => Ok(steady_state(&load(cli)?, io)),
        Command::Simulate => {
            let config = load(cli)?;
            Ok(simulate_cmd(&config, &out_dir(cli, &config), io))
        }
        Command::FitDecay { run, from, to } => {
            let config = match &cli.config {
                Some(_) => Some(load(cli)?),
                None => None,
            };
            let target = run
                .clone()
                .or_else(|| cli.out.clone())
                .or_else(|| config.as_ref().map(|c| c.output.dir.clone()))
                .ok_or_else(|| ConfigError::Syntax("give a run directory, --out or --config".into()))?;
            Ok(fit_decay_cmd(&target, *from, *to, config.as_ref(), io))
        }
        Command::Sweep { jobs } => {
            let config = load(cli)?;
            if config.time.is_none() {
                return Err(ConfigError::MissingSection("time"));
            }
            config.build_grid()?;
            let threads = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            Ok(sweep_cmd(&config, &out_dir(cli, &config), threads, io))
        }
    }
}

fn check_params(config: &ExperimentConfig, io: &mut Io) -> Result<i32, ConfigError> {
    let report = validate_hypothesis(&config.model_params());
    let names = ["h_b1", "h_b3", "h_sum", "stability"];
    for ((condition, passed, margin), name) in report.checks().into_iter().zip(names) {
        let verdict = if passed { "PASS" } else { "FAIL" };
        say!(io, "{verdict} {name:<10} margin {margin:+.6}   {condition}");
    }
    Ok(if report.all_hold() { EXIT_OK } else { EXIT_FAILURE })
}

fn steady_state(config: &ExperimentConfig, io: &mut Io) -> i32 {
    let params = config.model_params();
    let solution = match solve_steady_state_with(&params, &SolverOptions::default()) {
        Ok(s) => s,
        Err(e) => {
            complain!(io, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let ss = solution.state;
    let r = steady_state_residual(&params, ss.as_array());
    say!(io, "u* = {:.15}", ss.u_star);
    say!(io, "v* = {:.15}", ss.v_star);
    say!(io, "w* = {:.15}", ss.w_star);
    say!(io, "residual = ({:+.3e}, {:+.3e}, {:+.3e})", r[0], r[1], r[2]);
    say!(io, "J(0) = {}", solution.j_at_zero);
    say!(io, "J({}) = {}", solution.upper, solution.j_at_upper);
    say!(
        io,
        "J(w*) = {:+.3e} after {} bisection steps",
        steady_j(&params, ss.w_star),
        solution.iterations
    );
    if !ss.verified {
        say!(
            io,
            "note: parameters violate (H); positivity of the result is not guaranteed in general"
        );
    }
    EXIT_OK
}

fn simulate_cmd(config: &ExperimentConfig, dir: &Path, io: &mut Io) -> i32 {
    match simulate(config, dir) {
        Ok(report) => {
            let s = &report.summary;
            let last = report.records.last().expect("runs record the initial state");
            say!(io, "run directory: {}", report.dir.display());
            say!(io, "steps: {}, records: {}", s.steps, report.records.len());
            say!(
                io,
                "final t = {}, max-norm distance to steady state = {:.6e}",
                last.t,
                last.linf_distance()
            );
            match (&s.fit, &s.fit_error) {
                (Some(f), _) => say!(
                    io,
                    "decay fit on [{}, {}]: C1 = {:.6e}, C2 = {:.6}, r^2 = {:.6}",
                    f.window[0],
                    f.window[1],
                    f.c1,
                    f.c2,
                    f.r_squared
                ),
                (None, Some(e)) => say!(io, "decay fit unavailable: {e}"),
                (None, None) => {}
            }
            let st = &s.stability;
            say!(
                io,
                "B at (u_max, v_max) = ({:.6}, {:.6}): {}",
                st.u_max,
                st.v_max,
                if st.b_positive_definite {
                    "positive definite"
                } else {
                    "NOT positive definite"
                }
            );
            say!(
                io,
                "empirical thresholds: xi <= {:.6}, chi <= {:.6}",
                st.xi_threshold,
                st.chi_threshold
            );
            EXIT_OK
        }
        Err(e) => {
            complain!(io, "error: {e}");
            e.exit_code()
        }
    }
}

fn fit_decay_cmd(
    target: &Path,
    from: Option<f64>,
    to: Option<f64>,
    config: Option<&ExperimentConfig>,
    io: &mut Io,
) -> i32 {
    let path = if target.is_dir() {
        target.join(TIMESERIES_FILE)
    } else {
        target.to_owned()
    };
    let records = match read_timeseries(&path) {
        Ok(r) => r,
        Err(e) => {
            complain!(io, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let t_last = records.last().map_or(0.0, |r| r.t);
    let default = config
        .and_then(|c| c.output.fit_window)
        .map_or(Window::second_half(t_last), |[a, b]| Window::new(a, b));
    let window = Window::new(from.unwrap_or(default.t_start), to.unwrap_or(default.t_end));
    match fit_decay(&records, window) {
        Ok(f) => {
            say!(
                io,
                "window = [{}, {}], samples = {}",
                f.window.t_start,
                f.window.t_end,
                f.samples
            );
            say!(io, "C1 = {:.6e}", f.c1);
            say!(io, "C2 = {:.6}", f.c2);
            say!(io, "r^2 = {:.6}", f.r_squared);
            EXIT_OK
        }
        Err(e) => {
            complain!(io, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn sweep_cmd(config: &ExperimentConfig, dir: &Path, threads: usize, io: &mut Io) -> i32 {
    let report = match run_sweep(config, dir, threads) {
        Ok(r) => r,
        Err(e) => {
            complain!(io, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    for p in &report.points {
        let label: Vec<String> = p.assignments.iter().map(|(k, v)| format!("{k}={v}")).collect();
        match &p.result {
            Ok(r) => {
                let c2 = r
                    .summary
                    .fit
                    .as_ref()
                    .map_or("n/a".to_owned(), |f| format!("{:.6}", f.c2));
                say!(io, "ok     {} [{}] C2 = {c2}", p.dir.display(), label.join(" "));
            }
            Err(e) => complain!(io, "failed {} [{}]: {e}", p.dir.display(), label.join(" ")),
        }
    }
    say!(io, "index: {}", report.index.display());
    if report.failures() == 0 {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}
