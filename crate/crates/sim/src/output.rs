//! CSV time series and snapshots, run summaries and gnuplot scripts.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which reads back
//! bit-exactly. Undefined values are written as `NaN`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use alarmtaxis_core::{DecayFit, DiagnosticsRecord, Grid, Species, StateField};
use serde::{Deserialize, Serialize};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const PLOT_FILE: &str = "plot.gp";
pub const SNAPSHOT_PREFIX: &str = "snapshot_";

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("no records to write")]
    Empty,
    #[error("{0} not found")]
    Missing(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_owned(),
        source,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> OutputError {
    OutputError::Format {
        path: path.to_owned(),
        reason: reason.into(),
    }
}

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_owned()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_f64(path: &Path, raw: &str) -> Result<f64, OutputError> {
    raw.trim()
        .parse()
        .map_err(|_| format_err(path, format!("not a number: {raw:?}")))
}

/// One header row naming every record field, then one row per record.
pub fn write_timeseries(records: &[DiagnosticsRecord], path: &Path) -> Result<(), OutputError> {
    if records.is_empty() {
        return Err(OutputError::Empty);
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(DiagnosticsRecord::FIELDS).map_err(csv_err(path))?;
    for r in records {
        w.write_record(r.to_array().map(fmt_f64)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_timeseries(path: &Path) -> Result<Vec<DiagnosticsRecord>, OutputError> {
    if !path.exists() {
        return Err(OutputError::Missing(path.to_owned()));
    }
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if !header.iter().eq(DiagnosticsRecord::FIELDS) {
        return Err(format_err(path, "column set differs from the record fields"));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err(path))?;
        let mut a = [0.0; 19];
        for (slot, raw) in a.iter_mut().zip(row.iter()) {
            *slot = parse_f64(path, raw)?;
        }
        out.push(DiagnosticsRecord::from_array(a));
    }
    Ok(out)
}

/// Grid and time metadata carried in a snapshot's header line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotMeta {
    pub t: f64,
    pub dim: usize,
    pub n: [usize; 2],
    pub length: [f64; 2],
}

const SNAPSHOT_COLUMNS: &str = "cell,i,j,x,y,u,v,w";

/// One header line, then one row per cell in row-major order
/// (`cell = j * nx + i`).
pub fn write_snapshot(state: &StateField, grid: &Grid, path: &Path) -> Result<(), OutputError> {
    let [nx, ny] = grid.n();
    let [lx, ly] = grid.length();
    let mut text = format!(
        "# t={} dim={} nx={nx} ny={ny} lx={} ly={} order=row-major(cell=j*nx+i) columns={SNAPSHOT_COLUMNS}\n",
        fmt_f64(state.t),
        grid.dim(),
        fmt_f64(lx),
        fmt_f64(ly),
    );
    let densities = Species::ALL.map(|s| state.densities(s));
    for cell in 0..grid.cells() {
        let (i, j) = grid.position(cell);
        let [x, y] = grid.center(cell);
        let _ = writeln!(
            text,
            "{cell},{i},{j},{},{},{},{},{}",
            fmt_f64(x),
            fmt_f64(y),
            fmt_f64(densities[0][cell]),
            fmt_f64(densities[1][cell]),
            fmt_f64(densities[2][cell]),
        );
    }
    fs::write(path, text).map_err(io_err(path))
}

fn parse_meta(path: &Path, line: &str) -> Result<SnapshotMeta, OutputError> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| format_err(path, "missing header line"))?;
    let get = |key: &str| -> Result<&str, OutputError> {
        body.split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| format_err(path, format!("header lacks `{key}`")))
    };
    let int = |raw: &str| {
        raw.parse::<usize>()
            .map_err(|_| format_err(path, format!("bad integer {raw:?}")))
    };
    Ok(SnapshotMeta {
        t: parse_f64(path, get("t")?)?,
        dim: int(get("dim")?)?,
        n: [int(get("nx")?)?, int(get("ny")?)?],
        length: [parse_f64(path, get("lx")?)?, parse_f64(path, get("ly")?)?],
    })
}

/// Reads a snapshot back as absolute densities.
pub fn read_snapshot(path: &Path) -> Result<(SnapshotMeta, Grid, StateField), OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    let meta = parse_meta(path, lines.next().unwrap_or(""))?;
    let grid = match meta.dim {
        1 => Grid::line(meta.n[0], meta.length[0]),
        2 => Grid::rect(meta.n[0], meta.n[1], meta.length[0], meta.length[1]),
        d => return Err(format_err(path, format!("dim = {d}"))),
    }
    .map_err(|e| format_err(path, e.to_string()))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut fields = [Vec::new(), Vec::new(), Vec::new()];
    for (expected, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let cell: usize = row[0].parse().map_err(|_| format_err(path, "bad cell index"))?;
        if cell != expected {
            return Err(format_err(path, format!("cell {cell} out of order")));
        }
        for s in 0..3 {
            fields[s].push(parse_f64(path, &row[5 + s])?);
        }
    }
    let [u, v, w] = fields;
    let mut state = StateField::from_densities(&grid, u, v, w).map_err(|e| format_err(path, e.to_string()))?;
    state.t = meta.t;
    Ok((meta, grid, state))
}

pub fn snapshot_name(index: usize) -> String {
    format!("{SNAPSHOT_PREFIX}{index:03}.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
    pub window: [f64; 2],
    pub samples: usize,
}

impl From<&DecayFit> for FitSummary {
    fn from(f: &DecayFit) -> Self {
        FitSummary {
            c1: f.c1,
            c2: f.c2,
            r_squared: f.r_squared,
            window: [f.window.t_start, f.window.t_end],
            samples: f.samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSummary {
    pub h_b1: bool,
    pub h_b3: bool,
    pub h_sum: bool,
    pub stability: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    /// Largest `u` and `v` seen over the recorded states.
    pub u_max: f64,
    pub v_max: f64,
    pub b_positive_definite: bool,
    /// Largest `ξ` (resp. `χ`) keeping `B(u_max, v_max)` positive definite
    /// with the other coefficient fixed. Empirical; `inf` if none found,
    /// `nan` if `B` fails even at zero.
    pub xi_threshold: f64,
    pub chi_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steady_state: [f64; 3],
    pub steps: usize,
    pub hypothesis: HypothesisSummary,
    pub stability: StabilitySummary,
    /// Last record, keyed by field name.
    pub final_record: toml::Table,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

pub fn record_table(r: &DiagnosticsRecord) -> toml::Table {
    DiagnosticsRecord::FIELDS
        .iter()
        .zip(r.to_array())
        .map(|(k, v)| (k.to_string(), toml::Value::Float(v)))
        .collect()
}

pub fn write_summary(summary: &RunSummary, path: &Path) -> Result<(), OutputError> {
    let text = toml::to_string(summary).map_err(|e| format_err(path, e.to_string()))?;
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_summary(path: &Path) -> Result<RunSummary, OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    toml::from_str(&text).map_err(|e| format_err(path, e.to_string()))
}

/// Column numbers (1-based) for gnuplot.
fn col(name: &str) -> usize {
    DiagnosticsRecord::FIELDS
        .iter()
        .position(|f| *f == name)
        .expect("known field")
        + 1
}

/// Writes `plot.gp` into `run_dir`. The script reads `timeseries.csv` by
/// relative path and overlays the fitted decay line when the summary has one.
pub fn emit_plot_script(run_dir: &Path) -> Result<PathBuf, OutputError> {
    let series = run_dir.join(TIMESERIES_FILE);
    if !series.is_file() {
        return Err(OutputError::Missing(series));
    }
    let summary_path = run_dir.join(SUMMARY_FILE);
    let fit = if summary_path.is_file() {
        read_summary(&summary_path)?.fit
    } else {
        None
    };

    let dist = format!(
        "(${}+${}+${})",
        col("linf_dist_u"),
        col("linf_dist_v"),
        col("linf_dist_w")
    );
    let bound = format!(
        "(${}+${}+${}+${}+${})",
        col("linf_u"),
        col("grad_linf_u"),
        col("linf_v"),
        col("grad_linf_v"),
        col("linf_w")
    );
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot -p {PLOT_FILE}   (run from this directory)");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile missing 'NaN'");
    let _ = writeln!(s, "set terminal svg size 900,1200");
    let _ = writeln!(s, "set output 'plots.svg'");
    let _ = writeln!(s, "set multiplot layout 3,1");
    let _ = writeln!(s, "set xlabel 't'");
    let _ = writeln!(s);
    let _ = writeln!(s, "set title 'distance to the steady state (sum of max norms)'");
    let _ = writeln!(s, "set logscale y");
    match &fit {
        Some(f) => {
            let _ = writeln!(s, "c1 = {}", fmt_f64(f.c1));
            let _ = writeln!(s, "c2 = {}", fmt_f64(f.c2));
            let _ = writeln!(
                s,
                "plot '{TIMESERIES_FILE}' every ::1 using 1:{dist} with lines title 'distance', \\\n     [{}:{}] c1*exp(-c2*x) with lines dashtype 2 title sprintf('fit, rate %.4g', c2)",
                f.window[0], f.window[1]
            );
        }
        None => {
            let _ = writeln!(
                s,
                "plot '{TIMESERIES_FILE}' every ::1 using 1:{dist} with lines title 'distance'"
            );
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "set title 'Lyapunov energy'");
    let _ = writeln!(
        s,
        "plot '{TIMESERIES_FILE}' every ::1 using 1:{} with lines title 'E(t)'",
        col("energy")
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "set title 'norms'");
    let _ = writeln!(s, "unset logscale y");
    let _ = writeln!(
        s,
        "plot '{TIMESERIES_FILE}' every ::1 using 1:{bound} with lines title 'W1inf(u) + W1inf(v) + Linf(w)', \\\n     '' every ::1 using 1:{} with lines title 'max u', \\\n     '' every ::1 using 1:{} with lines title 'max v', \\\n     '' every ::1 using 1:{} with lines title 'max w'",
        col("linf_u"),
        col("linf_v"),
        col("linf_w")
    );
    let _ = writeln!(s, "unset multiplot");

    let path = run_dir.join(PLOT_FILE);
    fs::write(&path, s).map_err(io_err(&path))?;
    Ok(path)
}
