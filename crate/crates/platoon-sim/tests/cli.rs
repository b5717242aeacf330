//! End-to-end checks of the command-line surface: flags, outputs, exit
//! codes and diagnostics.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_platoon-sim"))
}

fn default_config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

#[test]
fn run_writes_metrics_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(default_config_path())
        .args(["--out"])
        .arg(dir.path())
        .args(["--duration-s", "2", "--seed", "9"])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,time_s,gap1_m,steer1_rad,speed1_mps,lost1,gap2_m,steer2_rad,speed2_mps,lost2"
    );
    assert_eq!(lines.count(), 100, "2 s at 20 ms ticks");

    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let row = summary.lines().nth(1).unwrap();
    assert!(row.starts_with("1.00000000e1,9,100,"), "row: {row}");
}

#[test]
fn sweep_writes_table_and_per_run_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["sweep", "--config"])
        .arg(default_config_path())
        .args(["--out"])
        .arg(dir.path())
        .args(["--cam-hz", "10,2.5", "--seeds", "1"])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let table = std::fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 3, "header plus one row per (rate, seed)");
    // Sorted by rate.
    assert!(rows[1].starts_with("2.50000000e0,1,"));
    assert!(rows[2].starts_with("1.00000000e1,1,"));
    assert!(dir.path().join("metrics_10hz_seed1.csv").exists());
    assert!(dir.path().join("metrics_2.5hz_seed1.csv").exists());
}

#[test]
fn invalid_config_fails_with_field_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        "[[vehicles]]\nrole = \"leader\"\n[[vehicles]]\nrole = \"leader\"\n",
    )
    .unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("vehicles.role"), "diagnostic was: {stderr}");
}

#[test]
fn indivisible_cam_hz_override_fails() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(default_config_path())
        .args(["--out"])
        .arg(dir.path())
        .args(["--cam-hz", "3"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("cam_hz"), "diagnostic was: {stderr}");
}

#[test]
fn missing_config_fails_with_path_context() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["run", "--config", "/nonexistent/nowhere.toml", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("nowhere.toml"), "diagnostic was: {stderr}");
}
