use std::path::Path;
use std::process::{Command, Output};

fn biphoton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biphoton")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn budget_succeeds_and_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&["budget", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("generation_rate"));
    for name in ["budget.json", "config.toml", "report.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn car_flags_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&["car", "--out", path(dir.path()), "--batches", "3", "--duration", "2", "--seed", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("car_timeseries.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let config = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert!(config.starts_with("seed = 5\n"));
    assert!(config.contains("batch_duration = 2.0"));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[pump]\npowr = 7.5\n").unwrap();
    let out = biphoton(&["budget", "--config", path(&cfg), "--out", path(&dir.path().join("o"))]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("powr") && msg.contains("line 2"), "{msg}");
}

#[test]
fn invalid_values_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&["budget", "--power", "-1", "--out", path(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("power ≥ 0"), "{}", stderr(&out));
    let out = biphoton(&["car", "--duration", "0", "--out", path(dir.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn empty_config_file_is_the_default_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "").unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&biphoton(&["budget", "--config", path(&cfg), "--out", path(&a)])), 0);
    assert_eq!(code(&biphoton(&["budget", "--out", path(&b)])), 0);
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
}

#[test]
fn physics_error_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&["spectrum", "--power", "0", "--out", path(dir.path())]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&biphoton(&["budget", "--config", path(&missing), "--out", path(dir.path())])), 4);
    // output directory path occupied by a file
    let file = dir.path().join("occupied");
    std::fs::write(&file, "x").unwrap();
    assert_eq!(code(&biphoton(&["budget", "--out", path(&file)])), 4);
}

#[test]
fn timing_adds_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&biphoton(&["budget", "--timing", "--out", path(dir.path())])), 0);
    let report = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"wall_time_s\""));
}
