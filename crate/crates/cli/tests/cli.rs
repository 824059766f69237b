use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BOUNDED_PAIR: &str = "[[-1.2, 1.2, 0.1, 0.5, -0.2], [-1.4, 0.9, 0.0, 0.1, 0.3]]";

fn kslie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kslie")).args(args).output().expect("binary runs")
}

fn config(dir: &TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("run.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_default_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "{}");
    let out = kslie(&["verify", "--config", s(&cfg), "--seed", "42", "--samples", "30"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = report.as_array().unwrap();
    assert_eq!(rows.len(), 7);
    for r in rows {
        let keys: Vec<_> = r.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 5, "{r}");
        for k in ["check", "max_residual", "tolerance", "pass", "seed"] {
            assert!(r.get(k).is_some(), "{k} missing in {r}");
        }
        assert_eq!(r["seed"], 42);
        assert_eq!(r["pass"], true);
    }
}

#[test]
fn verify_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"seed": 5, "samples": 15}"#);
    let a = kslie(&["verify", "--config", s(&cfg)]);
    let b = kslie(&["verify", "--config", s(&cfg)]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_roundoff_tolerance_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"tolerance": 1e-15, "samples": 20}"#);
    let out = kslie(&["verify", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.as_array().unwrap().iter().any(|r| r["pass"] == false));
}

#[test]
fn verify_rejects_zero_samples() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"samples": 0}"#);
    let out = kslie(&["verify", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("samples"));
    let cfg = config(&dir, "{}");
    assert_eq!(kslie(&["verify", "--config", s(&cfg), "--samples", "0"]).status.code(), Some(2));
}

#[test]
fn unknown_keys_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"integrator": {"t1": 1.0, "tol": 1e-9}}"#);
    let out = kslie(&["verify", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("integrator.tol"), "{}", stderr(&out));
    let missing = dir.path().join("absent.json");
    assert_eq!(kslie(&["verify", "--config", s(&missing)]).status.code(), Some(2));
}

#[test]
fn simulate_translation_flow() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"coefficients": ["0", "1", "0", "0", "0"], "initial": [[0.5, 1.0, 0.2, 0.0, 0.0]]}"#);
    let prefix = dir.path().join("run");
    let out = kslie(&["simulate", "--config", s(&cfg), "--out-prefix", s(&prefix)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x1,y1,z1,u1,v1"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - (0.5 - v[0])).abs() < 1e-12, "{line}");
        rows += 1;
    }
    assert!(rows > 1);
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(json["samples"].as_array().unwrap().len(), rows);
}

#[test]
fn simulate_two_copies_reports_drift() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, &format!(r#"{{"initial": {BOUNDED_PAIR}}}"#));
    let prefix = dir.path().join("pair");
    let out = kslie(&["simulate", "--config", s(&cfg), "--out-prefix", s(&prefix)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let drift = report["drift"].as_array().unwrap();
    assert_eq!(drift.len(), 5);
    for d in drift {
        assert!(d["max_residual"].as_f64().unwrap() < 1e-6, "{d}");
    }
    let header = std::fs::read_to_string(dir.path().join("pair.csv")).unwrap();
    assert!(header.starts_with("t,x1,y1,z1,u1,v1,x2,y2,z2,u2,v2\n"));
}

#[test]
fn simulate_rejects_y_zero_before_integrating() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"initial": [[0.0, 0.0, 0.0, 0.0, 0.0]]}"#);
    let prefix = dir.path().join("bad");
    let out = kslie(&["simulate", "--config", s(&cfg), "--out-prefix", s(&prefix)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("initial[0]"));
    assert!(!dir.path().join("bad.csv").exists());
}

#[test]
fn simulate_blow_up_is_runtime_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"coefficients": ["1", "0", "0", "0", "0"], "initial": [[1.0, 1.0, 0.0, 0.0, 0.0]]}"#);
    let prefix = dir.path().join("blow");
    let out = kslie(&["simulate", "--config", s(&cfg), "--out-prefix", s(&prefix)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("t = 0.1666"), "{}", stderr(&out));
}

#[test]
fn superpose_demo_pair() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, &format!(r#"{{"initial": {BOUNDED_PAIR}}}"#));
    let report_path = dir.path().join("sup.json");
    let out = kslie(&["superpose", "--config", s(&cfg), "--out", s(&report_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report["max_residual"].as_f64().unwrap() < 1e-6);
    assert!(report["max_condition"].as_f64().unwrap() >= 1.0);
    assert_eq!(report["pass"], true);
    assert!(report["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn superpose_warns_on_coincident_pair() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"initial": [[-1.2, 1.2, 0.1, 0.5, -0.2], [-1.2, 1.2, 0.1, 0.5, -0.2]]}"#);
    let report_path = dir.path().join("sup.json");
    let out = kslie(&["superpose", "--config", s(&cfg), "--out", s(&report_path)]);
    assert!(stderr(&out).contains("degenerate configuration"), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(!report["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn superpose_needs_two_initial_conditions() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"initial": [[-1.2, 1.2, 0.1, 0.5, -0.2]]}"#);
    let report_path = dir.path().join("sup.json");
    let out = kslie(&["superpose", "--config", s(&cfg), "--out", s(&report_path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("initial[1]"), "{}", stderr(&out));
}
