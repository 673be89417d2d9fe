use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ftvc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftvc")).args(args).output().unwrap()
}

fn shipped(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.txt"))
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// A short copy of the low-speed scenario.
fn short_scenario(dir: &Path) -> String {
    let text = std::fs::read_to_string(shipped("low_speed")).unwrap().replace("horizon = 10", "horizon = 1.5");
    let path = dir.join("short.txt");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_csv_and_svgs() {
    let dir = tempfile::tempdir().unwrap();
    let sc = short_scenario(dir.path());
    let out = dir.path().to_str().unwrap();
    let o = ftvc(&["run", &sc, "--controller", "baseline", "--out", out, "--svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("low_speed_baseline.csv")).unwrap();
    assert!(csv.starts_with("t,Vx,Vy,r,beta,"));
    for suffix in ["series", "trajectory"] {
        let svg = std::fs::read_to_string(dir.path().join(format!("low_speed_baseline_{suffix}.svg"))).unwrap();
        assert!(svg.contains("<svg"));
    }
    assert!(stdout(&o).contains("max |beta|"));
}

#[test]
fn coarse_step_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let sc = short_scenario(dir.path());
    let o = ftvc(&["run", &sc, "--dt", "0.05", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn configuration_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "[scenario]\ninitial_speed = fast\n").unwrap();
    let bad = bad.to_str().unwrap();
    let sc = short_scenario(dir.path());
    let missing = dir.path().join("missing.txt");
    for args in [
        vec!["run", bad],
        vec!["run", missing.to_str().unwrap()],
        vec!["run", &sc, "--dt", "0.0007"],
        vec!["run", &sc, "--controller", "fuzzy"],
        vec!["sweep", &sc, "--controller", "proposed", "--vmin", "20", "--vmax", "10"],
        vec!["stability"],
        vec!["launch"],
    ] {
        let o = ftvc(&args);
        assert_eq!(o.status.code(), Some(3), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn stability_reports_sign() {
    let o = ftvc(&["stability", "--v0", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("(stable)"), "{}", stdout(&o));
}

#[test]
fn degenerate_sweep_runs_once() {
    let dir = tempfile::tempdir().unwrap();
    let sc = short_scenario(dir.path());
    let o = ftvc(&["sweep", &sc, "--controller", "proposed", "--vmin", "13", "--vmax", "13"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("max stable speed 13.000"), "{}", stdout(&o));
}
