use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use alarmtaxis::output::{read_summary, read_timeseries, SUMMARY_FILE, TIMESERIES_FILE};
use alarmtaxis::sweep::INDEX_FILE;

const PARAMS: &str = r#"
[params]
d1 = 1.0
d2 = 1.0
xi = 0.02
chi = 0.02
b1 = 0.5
b2 = 0.4
b3 = 0.1
sigma = 2.0
"#;

const RUN: &str = r#"
[grid]
n = 16
length = 1.0

[time]
t_end = 2.0

[output]
cadence = 5
"#;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn alarmtaxis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alarmtaxis"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_params_passes_example() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PARAMS);
    let o = alarmtaxis(&["check-params", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{out}");
}

#[test]
fn check_params_reports_failed_sum() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &PARAMS.replace("b3 = 0.1", "b3 = 0.2"));
    let o = alarmtaxis(&["check-params", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.contains("h_sum")).unwrap();
    assert!(line.starts_with("FAIL"), "{line}");
    assert!(line.contains("margin -0.100000"), "{line}");
}

#[test]
fn malformed_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[params\nd1 = ");
    let o = alarmtaxis(&["check-params", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));

    let cfg = write_config(tmp.path(), &format!("{PARAMS}\nbogus = 1\n"));
    let o = alarmtaxis(&["check-params", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let o = alarmtaxis(&["check-params", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = alarmtaxis(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn steady_state_prints_root_and_bracket() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PARAMS);
    let o = alarmtaxis(&["steady-state", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let w: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("w* = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((w - 1.505094097).abs() < 1e-8, "{w}");
    assert!(out.contains("J(0) = -4\n"), "{out}");
}

#[test]
fn steady_state_rejects_non_unit_growth() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{PARAMS}r1 = 2.0\n"));
    let o = alarmtaxis(&["steady-state", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("steady-state analysis requires unit growth rates"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn simulate_to_time_zero_summarises_initial_state() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("{PARAMS}{}", RUN.replace("t_end = 2.0", "t_end = 0.0")),
    );
    let run = tmp.path().join("run");
    let o = alarmtaxis(&["simulate", "--config", s(&cfg), "--out", s(&run), "-q"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let records = read_timeseries(&run.join(TIMESERIES_FILE)).unwrap();
    assert_eq!(records.len(), 1);
    let summary = read_summary(&run.join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary.steps, 0);
    assert_eq!(summary.final_record, alarmtaxis::output::record_table(&records[0]));
    assert_eq!(summary.final_record["t"].as_float(), Some(0.0));
}

#[test]
fn steady_initial_state_stays_put() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{PARAMS}{RUN}\n[initial]\nkind = \"steady\"\n"));
    let run = tmp.path().join("run");
    let o = alarmtaxis(&["simulate", "--config", s(&cfg), "--out", s(&run)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let records = read_timeseries(&run.join(TIMESERIES_FILE)).unwrap();
    let last = records.last().unwrap();
    assert_eq!(last.t, 2.0);
    assert!(last.linf_distance() < 1e-8, "{last:?}");
}

#[test]
fn overrides_beat_file_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{PARAMS}{RUN}"));
    let run = tmp.path().join("run");
    let o = alarmtaxis(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&run),
        "--set",
        "params.chi=0.3",
        "--set",
        "grid.n=8",
        "--set",
        "time.t_end=0.5",
        "--set",
        "initial.kind=constant",
        "--set",
        "initial.value=[0.2, 0.3, 0.4]",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let effective = fs::read_to_string(run.join("config.toml")).unwrap();
    let doc: toml::Table = effective.parse().unwrap();
    assert_eq!(doc["params"]["chi"].as_float(), Some(0.3));
    assert_eq!(doc["grid"]["n"].as_integer(), Some(8));
    assert_eq!(doc["time"]["t_end"].as_float(), Some(0.5));
    assert_eq!(doc["initial"]["kind"].as_str(), Some("constant"));
    let first = &read_timeseries(&run.join(TIMESERIES_FILE)).unwrap()[0];
    assert_eq!([first.linf_u, first.linf_v, first.linf_w], [0.2, 0.3, 0.4]);

    let o = alarmtaxis(&["check-params", "--config", s(&cfg), "--set", "params.b2=0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = alarmtaxis(&["check-params", "--config", s(&cfg), "--set", "params.nope=1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = alarmtaxis(&["check-params", "--config", s(&cfg), "--set", "params.d1=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("params.d1"), "{}", stderr(&o));
}

#[test]
fn fit_decay_reads_a_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("{PARAMS}{}", RUN.replace("t_end = 2.0", "t_end = 20.0")),
    );
    let run = tmp.path().join("run");
    let o = alarmtaxis(&["simulate", "--config", s(&cfg), "--out", s(&run), "-q"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = read_summary(&run.join(SUMMARY_FILE)).unwrap();
    let fit = summary.fit.unwrap();
    assert!(fit.c2 > 0.0);

    let o = alarmtaxis(&["fit-decay", s(&run)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let c2: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("C2 = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((c2 - fit.c2).abs() < 1e-6, "{c2} vs {}", fit.c2);

    let o = alarmtaxis(&["fit-decay", s(&run.join(TIMESERIES_FILE)), "--from", "2", "--to", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("window = [2, 8]"));

    let o = alarmtaxis(&["fit-decay", s(&tmp.path().join("missing"))]);
    assert_eq!(o.status.code(), Some(1));
}

fn index_rows(dir: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(dir.join(INDEX_FILE)).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

#[test]
fn single_point_sweep_matches_simulate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("{PARAMS}{RUN}\n[sweep]\n\"params.chi\" = [0.02]\n"),
    );
    let sweep = tmp.path().join("sweep");
    let o = alarmtaxis(&["sweep", "--config", s(&cfg), "--out", s(&sweep)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let single = tmp.path().join("single");
    let cfg = write_config(tmp.path(), &format!("{PARAMS}{RUN}"));
    let o = alarmtaxis(&["simulate", "--config", s(&cfg), "--out", s(&single)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let a = fs::read(sweep.join("point_000").join(TIMESERIES_FILE)).unwrap();
    let b = fs::read(single.join(TIMESERIES_FILE)).unwrap();
    assert_eq!(a, b);
    assert_eq!(index_rows(&sweep).len(), 1);
}

#[test]
fn two_by_two_sweep_writes_four_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("{PARAMS}{RUN}\n[sweep]\n\"params.chi\" = [0.01, 0.1]\n\"params.xi\" = [0.01, 0.1]\n"),
    );
    let sweep = tmp.path().join("sweep");
    let o = alarmtaxis(&["sweep", "--config", s(&cfg), "--out", s(&sweep), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for k in 0..4 {
        assert!(sweep.join(format!("point_{k:03}")).join(TIMESERIES_FILE).is_file());
    }
    let rows = index_rows(&sweep);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| &r[r.len() - 8] == "ok"));
    assert_eq!((&rows[1][2], &rows[1][3]), ("0.01", "0.1"));
}

#[test]
fn failed_sweep_point_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("{PARAMS}{RUN}\n[sweep]\n\"params.d1\" = [1.0, -1.0, 0.5]\n"),
    );
    let sweep = tmp.path().join("sweep");
    let o = alarmtaxis(&["sweep", "--config", s(&cfg), "--out", s(&sweep)]);
    assert_eq!(o.status.code(), Some(1));
    let rows = index_rows(&sweep);
    assert_eq!(rows.len(), 3);
    let status: Vec<&str> = rows.iter().map(|r| r.get(r.len() - 8).unwrap()).collect();
    assert_eq!(status, ["ok", "failed", "ok"]);
    assert!(rows[1][rows[1].len() - 1].contains("params.d1"));
    assert!(sweep.join("point_002").join(TIMESERIES_FILE).is_file());
}

#[test]
fn shipped_convergence_config_decays() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/convergence.toml");
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let o = alarmtaxis(&["simulate", "--config", s(&config), "--out", s(&run)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = read_summary(&run.join(SUMMARY_FILE)).unwrap();
    let fit = summary.fit.unwrap();
    assert!(fit.c2 > 0.0 && fit.r_squared > 0.99, "{fit:?}");
    for k in 0..3 {
        assert!(run.join(format!("snapshot_{k:03}.csv")).is_file());
    }
    assert!(stdout(&o).contains("positive definite"));
}
