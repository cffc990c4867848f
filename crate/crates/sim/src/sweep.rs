//! Cartesian-product parameter sweeps.
//!
//! Every point is an independent run in its own directory (`point_000`, ...).
//! Points are spread over worker threads; a failed point is recorded in the
//! index and the others carry on.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use alarmtaxis_core::validate_hypothesis;
use toml::{Table, Value};

use crate::config::{set_dotted, ConfigError, ExperimentConfig};
use crate::output::{fmt_f64, OutputError};
use crate::runner::{simulate, RunError, RunReport};

pub const INDEX_FILE: &str = "index.csv";

/// All combinations of the swept values, in key order with the last key
/// varying fastest.
pub fn expand(sweep: &std::collections::BTreeMap<String, Vec<Value>>) -> Vec<Vec<(String, Value)>> {
    let mut points = vec![Vec::new()];
    for (key, values) in sweep {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

/// The config for one point: `base` without its sweep table, with
/// `assignments` applied and re-validated.
pub fn point_config(base: &ExperimentConfig, assignments: &[(String, Value)]) -> Result<ExperimentConfig, ConfigError> {
    let mut stripped = base.clone();
    stripped.sweep.clear();
    let mut doc = Table::try_from(&stripped).expect("config always serializes");
    for (key, value) in assignments {
        set_dotted(&mut doc, key, value.clone()).map_err(|reason| ConfigError::Override {
            spec: key.clone(),
            reason,
        })?;
    }
    let config: ExperimentConfig = doc.try_into().map_err(|e: toml::de::Error| ConfigError::Override {
        spec: assignments.iter().map(|a| a.0.as_str()).collect::<Vec<_>>().join(", "),
        reason: e.message().to_owned(),
    })?;
    config.validate()?;
    Ok(config)
}

#[derive(Debug)]
pub struct PointOutcome {
    pub index: usize,
    pub dir: PathBuf,
    pub assignments: Vec<(String, Value)>,
    pub config: Option<ExperimentConfig>,
    pub result: Result<RunReport, RunError>,
}

#[derive(Debug)]
pub struct SweepReport {
    pub points: Vec<PointOutcome>,
    pub index: PathBuf,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.result.is_err()).count()
    }
}

pub fn point_dir_name(index: usize) -> String {
    format!("point_{index:03}")
}

fn run_point(base: &ExperimentConfig, out: &Path, index: usize, assignments: Vec<(String, Value)>) -> PointOutcome {
    let dir = out.join(point_dir_name(index));
    let (config, result) = match point_config(base, &assignments) {
        Ok(c) => {
            let r = simulate(&c, &dir);
            (Some(c), r)
        }
        Err(e) => (None, Err(RunError::Config(e))),
    };
    PointOutcome {
        index,
        dir,
        assignments,
        config,
        result,
    }
}

/// Runs every point of `base.sweep` under `out` with up to `threads` workers
/// and writes `index.csv`.
pub fn run_sweep(base: &ExperimentConfig, out: &Path, threads: usize) -> Result<SweepReport, OutputError> {
    fs::create_dir_all(out).map_err(|source| OutputError::Io {
        path: out.to_owned(),
        source,
    })?;
    let points = expand(&base.sweep);
    let keys: Vec<String> = base.sweep.keys().cloned().collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<PointOutcome>> = Mutex::new(Vec::with_capacity(points.len()));
    let workers = threads.clamp(1, points.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(assignments) = points.get(k) else { break };
                let outcome = run_point(base, out, k, assignments.clone());
                results
                    .lock()
                    .expect("no worker panics while holding the lock")
                    .push(outcome);
            });
        }
    });
    let mut points = results.into_inner().expect("workers have finished");
    points.sort_by_key(|p| p.index);

    let index = out.join(INDEX_FILE);
    write_index(&index, &keys, &points)?;
    Ok(SweepReport { points, index })
}

fn write_index(path: &Path, keys: &[String], points: &[PointOutcome]) -> Result<(), OutputError> {
    let csv_err = |source| OutputError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<String> = vec!["point".into(), "dir".into()];
    header.extend(keys.iter().cloned());
    header.extend(
        [
            "d1",
            "d2",
            "xi",
            "chi",
            "b1",
            "b2",
            "b3",
            "sigma",
            "h_b1",
            "h_b3",
            "h_sum",
            "stability",
            "status",
            "c2",
            "r_squared",
            "dist_u",
            "dist_v",
            "dist_w",
            "dist_total",
            "error",
        ]
        .map(String::from),
    );
    w.write_record(&header).map_err(csv_err)?;

    for p in points {
        let mut row: Vec<String> = vec![p.index.to_string(), point_dir_name(p.index)];
        row.extend(p.assignments.iter().map(|(_, v)| v.to_string()));
        match &p.config {
            Some(c) => {
                let m = c.model_params();
                row.extend([m.d1, m.d2, m.xi, m.chi, m.b1, m.b2, m.b3, m.sigma].map(fmt_f64));
                let h = validate_hypothesis(&m);
                row.extend([h.h_b1, h.h_b3, h.h_sum, h.stability].map(|b| b.to_string()));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 12)),
        }
        match &p.result {
            Ok(report) => {
                let last = report.records.last().expect("runs record the initial state");
                row.push("ok".into());
                let (c2, r2) = report.summary.fit.as_ref().map_or((String::new(), String::new()), |f| {
                    (fmt_f64(f.c2), fmt_f64(f.r_squared))
                });
                row.extend([c2, r2]);
                row.extend(
                    [
                        last.linf_dist_u,
                        last.linf_dist_v,
                        last.linf_dist_w,
                        last.linf_distance(),
                    ]
                    .map(fmt_f64),
                );
                row.push(report.summary.fit_error.clone().unwrap_or_default());
            }
            Err(e) => {
                row.push("failed".into());
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(e.to_string());
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn expansion_is_cartesian_in_key_order() {
        let mut sweep = BTreeMap::new();
        sweep.insert("params.chi".to_owned(), vec![Value::Float(0.1), Value::Float(0.2)]);
        sweep.insert(
            "grid.n".to_owned(),
            vec![Value::Integer(8), Value::Integer(16), Value::Integer(32)],
        );
        let points = expand(&sweep);
        assert_eq!(points.len(), 6);
        assert_eq!(points[0][0], ("grid.n".to_owned(), Value::Integer(8)));
        assert_eq!(points[1][1].1, Value::Float(0.2));
        assert_eq!(points[5][0].1, Value::Integer(32));
        assert_eq!(expand(&BTreeMap::new()), vec![Vec::new()]);
    }
}
