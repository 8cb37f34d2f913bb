//! The `nbmp-lab` binary.

use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nbmp-lab"))
}

#[test]
fn bounds_subcommand_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab()
        .args(["bounds", "--set", "delta=0.2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("12.05983"), "{text}");
    assert!(dir.path().join("manifest.json").is_file());
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "n = 5\nhorizon = 0.5\nobs_step = 0.1\n").unwrap();
    let out_dir = dir.path().join("out");
    let status = lab()
        .arg("run-nbmp")
        .arg("--config")
        .arg(&cfg)
        .args(["--set", "replicas=3", "--set", "events=false", "--out"])
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_dir.join("replica-0002/minima.csv").is_file());
    assert!(!out_dir.join("replica-0000/events.csv").exists());
    let minima = std::fs::read_to_string(out_dir.join("replica-0000/minima.csv")).unwrap();
    assert_eq!(minima.lines().count(), 1 + 6);
}

#[test]
fn bad_input_exits_with_error() {
    let out = lab().args(["run-nbmp", "--set", "no_such_field=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn fast_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab().args(["verify", "--level", "fast", "--out"]).arg(dir.path()).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    for id in ["A1 PASS", "A2 PASS", "A3 PASS", "A10 PASS", "A11 PASS"] {
        assert!(text.contains(id), "{text}");
    }
    assert!(dir.path().join("verify.csv").is_file());
}
