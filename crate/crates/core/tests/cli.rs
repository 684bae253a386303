use std::fs;
use std::process::{Command, Output};

fn mcac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcac")).args(args).output().unwrap()
}

const SMALL: &str = "grid.nx = 64\ngrid.ny = 64\ngrid.lx = 2.0\ngrid.ly = 2.0\neps = 0.08\ntmax = 0.005\n\
                     initial = circle\ninitial.cx = 1.0\ninitial.cy = 1.0\ninitial.r = 0.3\nrecord_stride = 5\n";

#[test]
fn profile_constants_pass() {
    let out = mcac(&["profile-constants"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("{SMALL}output_dir = {}\n", dir.path().join("out").display())).unwrap();
    let out = mcac(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out").join("timeseries.csv")).unwrap();
    assert!(csv.lines().count() > 2);
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, format!("{SMALL}colour = blue\n")).unwrap();
    let out = mcac(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let missing = mcac(&["simulate", dir.path().join("nope.cfg").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(mcac(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mcac(&[]).status.code(), Some(2));
}
