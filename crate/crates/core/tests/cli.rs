use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_speedlab");

fn write_config(dir: &Path, model: &str, tasks: &str, extra: &str) -> std::path::PathBuf {
    let out = dir.join("out");
    let cfg = format!(
        r#"{{"model": {model}, "tasks": {tasks}, "output": {out:?}{extra}}}"#,
        out = out.to_str().unwrap()
    );
    let path = dir.join("config.json");
    std::fs::write(&path, cfg).unwrap();
    path
}

fn fisher_model(b2: &str, d1: &str) -> String {
    format!(
        r#"{{"d1": "{d1}", "d2": "1", "b1": "1", "b2": "{b2}", "a11": "1", "a12": "0", "a21": "0", "a22": "1"}}"#
    )
}

fn run(args: &[&str]) -> i32 {
    let out = Command::new(BIN).args(args).arg("--quiet").output().unwrap();
    out.status.code().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

#[test]
fn fisher_speed_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &fisher_model("1", "1"), r#"["speed"]"#, r#", "discretization": {"nx": 8}"#);
    let code = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r = report(dir.path());
    assert!((r["c1_plus"].as_f64().unwrap() - 2.0).abs() < 1e-3);
    assert_eq!(r["status"], "ok");
    assert!(dir.path().join("out/u1_star.csv").exists());
}

#[test]
fn failed_hypothesis_is_a_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &fisher_model("-1", "1"), r#"["check"]"#, r#", "discretization": {"nx": 8}"#);
    let code = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(report(dir.path())["certificates"]["H1"]["verdict"], "fail");
}

#[test]
fn zero_diffusion_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &fisher_model("1", "0"), r#"["speed"]"#, "");
    let code = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    let r = report(dir.path());
    assert_eq!(r["status"], "validation-failure");
    assert_eq!(r["reason"]["kind"], "NonEllipticError");

    let code = run(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn malformed_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"model": {}, "tasks": ["speed"]}"#).unwrap();
    assert_eq!(run(&["run", path.to_str().unwrap()]), 2);
    assert_eq!(run(&["validate", path.to_str().unwrap()]), 2);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &fisher_model("1", "1"), r#"["eigen", "speed"]"#, r#", "discretization": {"nx": 8}"#);
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["run", cfg]), 0);
    let first = std::fs::read(dir.path().join("out/report.json")).unwrap();
    assert_eq!(run(&["run", cfg, "--jobs", "1"]), 0);
    let second = std::fs::read(dir.path().join("out/report.json")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn front_alone_pulls_in_its_prerequisites() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo");
    let code = run(&["demo", "constants", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    for f in ["report.json", "u1_star.csv", "u2_star.csv", "lambda0_curve.csv", "front_trace.csv", "front_final.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["front"]["verdict"]["verdict"], "pass");

    let printed = Command::new(BIN).args(["demo", "constants", "--print"]).output().unwrap();
    let mut cfg: Value = serde_json::from_slice(&printed.stdout).unwrap();
    cfg["tasks"] = serde_json::json!(["front"]);
    cfg["output"] = serde_json::json!(dir.path().join("front").to_str().unwrap());
    let path = dir.path().join("front.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    assert_eq!(run(&["run", path.to_str().unwrap()]), 0);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("front/report.json")).unwrap()).unwrap();
    assert_eq!(r["tasks"], serde_json::json!(["orbit", "speed", "front"]));
    assert!(r["c0_plus"].as_f64().is_some());
    assert!(dir.path().join("front/u2_star.csv").exists());
}

#[test]
fn refine_reports_a_grid_study() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &fisher_model("1", "1"),
        r#"["speed"]"#,
        r#", "discretization": {"nt": 50, "nx": 8}"#,
    );
    assert_eq!(run(&["run", cfg.to_str().unwrap(), "--refine"]), 0);
    let r = report(dir.path());
    assert_eq!(r["refine"]["fine"]["nt"], 100);
    assert!((r["refine"]["extrapolated"]["c1_plus"].as_f64().unwrap() - 2.0).abs() < 1e-3);
}
