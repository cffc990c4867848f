//! A single simulation written to a run directory.

use std::fs;
use std::path::{Path, PathBuf};

use alarmtaxis_core::matrices::{b_threshold, TaxisCoefficient};
use alarmtaxis_core::steady::DEFAULT_TOL;
use alarmtaxis_core::{
    fit_decay, matrix_b, record, run_detailed, solve_steady_state, validate_hypothesis, DiagnosticsRecord,
    Error as CoreError, StateField, Window,
};

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{
    emit_plot_script, record_table, snapshot_name, write_snapshot, write_summary, write_timeseries, FitSummary,
    HypothesisSummary, OutputError, RunSummary, StabilitySummary, SUMMARY_FILE, TIMESERIES_FILE,
};

pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{source}")]
    Setup { source: CoreError },
    #[error("simulation failed after t = {last_t}: {source}")]
    Step { source: CoreError, last_t: f64 },
}

impl RunError {
    /// 2 for configuration problems, 1 for everything that went wrong while
    /// computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub records: Vec<DiagnosticsRecord>,
    pub summary: RunSummary,
}

/// Runs `config` and writes the config, time series, snapshots, summary and
/// plot script into `dir`.
pub fn simulate(config: &ExperimentConfig, dir: &Path) -> Result<RunReport, RunError> {
    config.validate()?;
    let params = config.model_params();
    let grid = config.build_grid()?;
    let step_cfg = config.step_config()?;
    let t_end = step_cfg.t_end;
    let steady = solve_steady_state(&params, DEFAULT_TOL).map_err(|source| RunError::Setup { source })?;
    let initial = config
        .initial
        .condition()?
        .build(&grid, Some(&steady))
        .map_err(|source| RunError::Setup { source })?;

    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut effective = config.clone();
    effective.output.dir = dir.to_owned();
    effective.sweep.clear();
    let config_path = dir.join(CONFIG_FILE);
    fs::write(&config_path, effective.to_toml()).map_err(|source| OutputError::Io {
        path: config_path,
        source,
    })?;

    let mut snapshot_times = config.output.snapshots.clone();
    snapshot_times.sort_by(f64::total_cmp);
    snapshot_times.dedup();

    let mut records = Vec::new();
    let mut write_error: Option<OutputError> = None;
    let mut observer = |s: &StateField| {
        records.push(record(s, &steady, &params, &grid));
        if let Some(k) = snapshot_times.iter().position(|t| *t == s.t) {
            if write_error.is_none() {
                write_error = write_snapshot(s, &grid, &dir.join(snapshot_name(k))).err();
            }
        }
    };
    let outcome = run_detailed(&initial, &params, &grid, &step_cfg, &mut observer);
    if let Some(e) = write_error {
        return Err(e.into());
    }
    let outcome = match outcome {
        Ok(o) => o,
        Err(source) => {
            let last_t = records.last().map_or(initial.t, |r| r.t);
            if !records.is_empty() {
                write_timeseries(&records, &dir.join(TIMESERIES_FILE))?;
            }
            return Err(RunError::Step { source, last_t });
        }
    };
    write_timeseries(&records, &dir.join(TIMESERIES_FILE))?;

    let window = match config.output.fit_window {
        Some([a, b]) => Window::new(a, b),
        None => Window::second_half(t_end),
    };
    let (fit, fit_error) = match fit_decay(&records, window) {
        Ok(f) => (Some(FitSummary::from(&f)), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let u_max = records.iter().map(|r| r.linf_u).fold(0.0, f64::max);
    let v_max = records.iter().map(|r| r.linf_v).fold(0.0, f64::max);
    let threshold = |which| b_threshold(&params, &steady, u_max, v_max, which).unwrap_or(f64::NAN);
    let report = validate_hypothesis(&params);
    let summary = RunSummary {
        steady_state: steady.as_array(),
        steps: outcome.steps,
        hypothesis: HypothesisSummary {
            h_b1: report.h_b1,
            h_b3: report.h_b3,
            h_sum: report.h_sum,
            stability: report.stability,
        },
        stability: StabilitySummary {
            u_max,
            v_max,
            b_positive_definite: matrix_b(&params, u_max, v_max, &steady).is_positive_definite(),
            xi_threshold: threshold(TaxisCoefficient::Xi),
            chi_threshold: threshold(TaxisCoefficient::Chi),
        },
        final_record: record_table(records.last().expect("the initial state is always recorded")),
        fit,
        fit_error,
    };
    write_summary(&summary, &dir.join(SUMMARY_FILE))?;
    emit_plot_script(dir)?;

    Ok(RunReport {
        dir: dir.to_owned(),
        records,
        summary,
    })
}
