use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn latreap(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_latreap"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("run.cfg");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

#[test]
fn validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = latreap(dir.path(), &["validate", "--trials", "5"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!(s["subcommand"], "validate");
    assert_eq!(s["pass"], true);
    assert_eq!(s["config"]["trials"], "5");
}

#[test]
fn raw_score_on_four_linear_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = latreap(dir.path(), &["counterexamples", "--trials", "3"], Some("family = linear\nn = 4\n"));
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path());
    let e = s["results"]["linear"]["raw_score_expected_access"].as_f64().unwrap();
    assert!((e - 2.0).abs() < 1e-9, "{e}");
    assert_eq!(s["results"]["linear"]["raw_score_depth_is_key"], true);
}

#[test]
fn same_seed_same_bytes() {
    let cfg = "n = 32\nm = 2000\nrecord_steps = true\n";
    let read = |d: &Path, f: &str| std::fs::read(d.join("out").join(f)).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = latreap(d.path(), &["working-set", "--trials", "2", "--seed", "11"], Some(cfg));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["trials.csv", "steps.csv", "summary.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = latreap(dir.path(), &["static-opt"], Some("bogus = 1\n"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    assert!(!dir.path().join("out/summary.json").exists());
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = latreap(dir.path(), &["static-opt"], Some("n 5\n"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn static_opt_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = latreap(dir.path(), &["static-opt", "--trials", "3"], Some("n = 128\nm = 20000\n"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!(s["config"]["family"], "zipf");
    let r = &s["results"];
    for k in ["measured_cost", "dp_opt", "entropy_bound", "ratio"] {
        assert!(r[k].is_number(), "missing {k}: {r}");
    }
    assert!(r["ratio"].as_f64().unwrap() <= 4.0);
    let trials = std::fs::read_to_string(dir.path().join("out/trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 4);
}
