use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn degreelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degreelab")).args(args).output().expect("binary runs")
}

fn out_dir(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn koch_dimension_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = degreelab(&["dimension", "--out", out_dir(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let ledger = fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert!(ledger.lines().nth(1).unwrap().contains(",dimension,PASS,"));
    assert!(dir.path().join("dimension-estimate/dimension.svg").exists());
}

#[test]
fn identity_scaling_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scaling.json",
        r#"{"kind": "scaling-law",
            "fields": [{"map": "identity", "n": 2, "h": 0.1}],
            "pairs": [[0.5, 1.0]],
            "lambdas": [1, 2, 4, 8]}"#,
    );
    let out = degreelab(&["scaling", "--config", &cfg, "--out", out_dir(dir.path())]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("PASS slope identity2#0 beta=0.5 p=1: 1.50"), "{stdout}");
}

#[test]
fn violated_check_fails_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.json", r#"{"kind": "distance-integral", "expected": 1.0}"#);
    let out = degreelab(&["distint", "--config", &cfg, "--out", out_dir(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let ledger = fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert!(ledger.lines().any(|l| l.contains(",integral,FAIL,")));
}

#[test]
fn invalid_config_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"kind": "seminorm", "field": {"map": "identity", "n": 2}, "pairs": [[0.5, 2.0]]}"#,
    );
    let out = degreelab(&["seminorm", "--config", &cfg, "--out", out_dir(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("ledger.csv").exists());
}

#[test]
fn kind_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.json", r#"{"kind": "dimension-estimate"}"#);
    let out = degreelab(&["converge", "--config", &cfg, "--out", out_dir(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not belong"));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = degreelab(&["degree", "--out", out_dir(dir.path()), "--seed", "7", "--resolution", "0.05"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    }
    for name in ["field.txt", "targets.csv", "field.svg", "summary.json", "config.json"] {
        let x = fs::read(a.path().join("degree-field").join(name)).unwrap();
        let y = fs::read(b.path().join("degree-field").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn counterexample_stability_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = degreelab(&["counterexample", "--stability", "--out", out_dir(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("holder-stability/holder.csv").exists());
}
