use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cdkernel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdkernel"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Writes `config` into `dir` and runs it with outputs in `dir/<out>`.
fn run(dir: &Path, config: &str, out: &str, jobs: u32) -> (i32, Option<Value>) {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    let out_dir = dir.join(out);
    let o = cdkernel(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--jobs",
        &jobs.to_string(),
    ]);
    let report = fs::read_to_string(out_dir.join("report.json"))
        .ok()
        .map(|t| serde_json::from_str(&t).unwrap());
    (o.status.code().expect("exit code"), report)
}

#[test]
fn scalar_universality_report() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"schema": 1, "kind": "universality-scalar", "model": "free-jacobi", "xi": 0,
        "indices": [500, 4000], "grid": {"type": "real", "from": -2, "to": 2, "step": 0.5},
        "params": {"f": 0.3183098861837907},
        "tolerances": {"sup_error": 0.02, "decay_ratio": 0.3333333333333333}}"#;
    let (code, report) = run(dir.path(), cfg, "out", 2);
    assert_eq!(code, 0);
    let report = report.unwrap();
    assert_eq!(report["passed"], Value::Bool(true));
    let errs = report["results"][0]["report"]["sup_errors"].as_array().unwrap();
    assert_eq!(errs.len(), 2);
    assert!(errs[1].as_f64().unwrap() < errs[0].as_f64().unwrap());
    let table = fs::read_to_string(dir.path().join("out/table_universality-scalar_xi0_L4000.0.csv")).unwrap();
    assert!(table.starts_with("re_z,im_z,re_w,im_w,re_k,im_k\n"));
    assert_eq!(table.lines().count(), 1 + 81);
}

#[test]
fn failing_threshold_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"schema": 1, "kind": "universality-scalar", "model": "free-jacobi",
        "indices": [50], "params": {"f": 0.3183098861837907}, "tolerances": {"sup_error": 1e-6}}"#;
    let (code, report) = run(dir.path(), cfg, "out", 1);
    assert_eq!(code, 1);
    let report = report.unwrap();
    assert_eq!(report["passed"], Value::Bool(false));
    assert_eq!(report["checks"][0]["passed"], Value::Bool(false));
}

#[test]
fn log_periodic_nonconvergence_is_a_datum() {
    let dir = TempDir::new().unwrap();
    let (code, report) = run(
        dir.path(),
        r#"{"schema": 1, "kind": "mfun", "model": "log-periodic", "xi": 0}"#,
        "out",
        1,
    );
    assert_eq!(code, 0);
    let limit = &report.unwrap()["results"][0]["limit"];
    assert_eq!(limit["converged"], Value::Bool(false));
    assert!(limit["oscillation"].as_f64().unwrap() > 0.1);
}

#[test]
fn config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    for cfg in [
        r#"{"schema": 1, "kind": "universality-scalar", "model": "free-jacobi", "indices": []}"#,
        r#"{"schema": 1, "kind": "kernel", "model": "no-such-model", "indices": [3]}"#,
        r#"{"schema": 1, "kind": "clock", "model": "log-periodic", "indices": [10]}"#,
        r#"{"schema": 1, "kind": "subordinacy", "model": "free-jacobi", "indices": [10], "tolerances": {"ratio": 0.1}}"#,
        r#"{"schema": 1, "kind": "kernel", "model": "free-jacobi", "indices": [3], "grid": {"type": "points", "points": []}}"#,
        r#"{"schema": 1, "kind": "kernel""#,
    ] {
        let (code, report) = run(dir.path(), cfg, "out", 1);
        assert_eq!(code, 2, "{cfg}");
        assert!(report.is_none());
    }
    let o = cdkernel(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"schema": 1, "kind": "universality-matrix", "model": "free-jacobi", "xi": [0, 0.5],
        "indices": [100, 400], "params": {"eta": [0, 1]}}"#;
    let (a, _) = run(dir.path(), cfg, "one", 1);
    let (b, _) = run(dir.path(), cfg, "two", 4);
    assert_eq!(a, b);
    let mut names: Vec<_> = fs::read_dir(dir.path().join("one"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n != "metadata.json")
        .collect();
    names.sort();
    assert_eq!(names.len(), 1 + 4);
    for n in names {
        let x = fs::read(dir.path().join("one").join(&n)).unwrap();
        let y = fs::read(dir.path().join("two").join(&n)).unwrap();
        assert_eq!(x, y, "{n:?}");
    }
}

#[test]
fn eta_mismatch_is_flagged() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"schema": 1, "kind": "universality-matrix", "model": "free-jacobi", "xi": 0.5,
        "indices": [50], "params": {"eta": [0, 1]}}"#;
    let (code, report) = run(dir.path(), cfg, "out", 1);
    assert_eq!(code, 0);
    let eta = &report.unwrap()["results"][0]["eta"];
    assert_eq!(eta["source"], "supplied");
    assert_eq!(eta["mismatch"], Value::Bool(true));
}

#[test]
fn kernel_forms_agree() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"schema": 1, "kind": "kernel", "model": "chebyshev", "xi": 0.2, "indices": [40],
        "tolerances": {"relative": 1e-10}}"#;
    let (code, report) = run(dir.path(), cfg, "out", 2);
    assert_eq!(code, 0, "{report:?}");
    let cfg = r#"{"schema": 1, "kind": "kernel", "model": "opuc-constant:0.3+0.2i", "indices": [25],
        "tolerances": {"relative": 1e-9}}"#;
    let (code, report) = run(dir.path(), cfg, "out", 2);
    assert_eq!(code, 0, "{report:?}");
}

#[test]
fn canonical_checks() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"schema": 1, "kind": "cansys-check", "model": "hamiltonian", "indices": [0.5, 2.0],
        "params": {"segments": [
            {"length": 1.0, "a": [[1, 0.3], [0.3, 0.5]], "b": [[0.2, -0.1], [-0.1, 0.4]]},
            {"length": 1.5, "a": [[0, 0], [0, 1]]}]},
        "tolerances": {"det_drift": 1e-10, "relative": 1e-8}}"#;
    let (code, report) = run(dir.path(), cfg, "out", 2);
    assert_eq!(code, 0, "{report:?}");
    let cfg = r#"{"schema": 1, "kind": "equivalence", "model": "ring:1+i", "indices": [1, 5, 20],
        "params": {"eta": [1, 1]}, "tolerances": {"max_distance": 1e-8}}"#;
    let (code, report) = run(dir.path(), cfg, "out", 2);
    assert_eq!(code, 0, "{report:?}");
}

#[test]
fn opuc_and_jacobi_side_experiments() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"schema": 1, "kind": "opuc", "model": "opuc-free", "indices": [200, 2000],
        "tolerances": {"sup_error": 0.01, "decay_ratio": 0.5}}"#;
    let (code, report) = run(dir.path(), cfg, "out", 2);
    assert_eq!(code, 0, "{report:?}");
    assert_eq!(report.unwrap()["results"][0]["g_source"], "closed-form");
    let cfg = r#"{"schema": 1, "kind": "clock", "model": "free-jacobi", "indices": [2000],
        "tolerances": {"gap_deviation": 0.01}}"#;
    let (code, report) = run(dir.path(), cfg, "out", 1);
    assert_eq!(code, 0, "{report:?}");
    let cfg = r#"{"schema": 1, "kind": "subordinacy", "model": "free-jacobi", "indices": [100000],
        "params": {"expected": 0.5}, "tolerances": {"ratio": 1e-4}}"#;
    let (code, report) = run(dir.path(), cfg, "out", 1);
    assert_eq!(code, 0, "{report:?}");
}

#[test]
fn lists_models() {
    let o = cdkernel(&["--list-models"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for id in ["free-jacobi", "log-periodic", "schrodinger-free", "opuc-list"] {
        assert!(text.contains(id), "{id}");
    }
}
