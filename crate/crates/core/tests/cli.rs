use std::path::Path;
use std::process::{Command, Output};

fn broxlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_broxlab")).args(args).current_dir(dir).output().expect("binary runs")
}

fn golden(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

const SMALL_GAMMA: [&str; 8] = ["--set", "c1=0.5", "--set", "c2=0.5", "--set", "c3=0.5", "--set", "v_grid=[6,8]"];

#[test]
fn j0_prints_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = broxlab(&["j0"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2.404825557695773");
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = broxlab(&["simulate", "--config", "nope.json", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(files_in(dir.path()).is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = broxlab(&["simulate", "--set", "replicatez=3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicatez"));
}

#[test]
fn invalid_v_shows_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.json");
    std::fs::write(&cfg, r#"{"experiment": "gamma", "base_seed": 1, "v_grid": [3], "c": 21}"#).unwrap();
    let out = broxlab(&["gamma", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("3 - 50*log(3)"), "{err}");
    assert_eq!(files_in(dir.path()), vec!["g.json"]);
}

#[test]
fn valley_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let path = golden("e1.csv");
    let out = broxlab(&["valley", "--path", path.to_str().unwrap(), "--threshold", "2", "--count", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let got: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let want: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(golden("valley_e1.json")).unwrap()).unwrap();
    assert_eq!(got, want);
}

#[test]
fn passing_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = broxlab(&["simulate", "--seed", "4", "--set", "replicates=3", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(files_in(dir.path()), vec!["simulate_4.csv", "simulate_4.json"]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("simulate_4.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["config"]["replicates"], 3);
}

#[test]
fn failing_test_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["gamma", "--seed", "3", "--set", "replicates=60", "--set", "ceiling=0"];
    args.extend(SMALL_GAMMA);
    let out = broxlab(&args, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn truncation_above_cap_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["gamma", "--seed", "3", "--set", "replicates=20", "--set", "env_budget=200"];
    args.extend(SMALL_GAMMA);
    let out = broxlab(&args, dir.path());
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gamma_3.json")).unwrap()).unwrap();
    assert_eq!(report["truncation"]["exceeded"], true);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    std::fs::write(&cfg, r#"{"experiment": "simulate", "base_seed": 9, "replicates": 50}"#).unwrap();
    let out = broxlab(
        &["simulate", "--config", cfg.to_str().unwrap(), "--set", "replicates=2", "--workers", "2", "--out", "r"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r/simulate_9.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["replicates"], 2);
    assert_eq!(report["config"]["workers"], 2);
}

#[test]
fn wrong_subcommand_for_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    std::fs::write(&cfg, r#"{"experiment": "simulate", "base_seed": 9}"#).unwrap();
    let out = broxlab(&["tanaka", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
