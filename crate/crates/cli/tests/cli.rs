use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn soliton() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_soliton"));
    c.env_remove("SOLITON_REPORT_DIR");
    c
}

fn manifests() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("manifests")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn verify(manifest: &Path, out: &Path, extra: &[&str]) -> Output {
    soliton().arg("verify").arg(manifest).arg("--out").arg(out).args(extra).output().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn models_lists_the_catalog() {
    let out = soliton().arg("models").output().unwrap();
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("round_sphere(n"));
    assert!(table.contains("steady, n=2, h=tanh r"));
    let rows = table.lines().count() - 1;
    assert_eq!(rows, soliton_core::models::catalog().len());
    assert!(rows >= 7);
}

#[test]
fn gaussian_identities_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let out = verify(&manifests().join("gaussian.toml"), &out_path, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_path);
    assert_eq!(report["schema_version"], "1");
    assert_eq!(report["exit_status"], "pass");
    let reports = report["models"][0]["suites"][0]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 5);
    assert!(reports.iter().all(|r| r["verdict"] == "pass"));
}

#[test]
fn cigar_manifest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = verify(&manifests().join("cigar.toml"), &dir.path().join("r.json"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn perturbed_gaussian_fails_with_listed_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let out = verify(&manifests().join("perturbed.toml"), &out_path, &[]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("soliton-residual-failed"), "{stderr}");
    let report = read_json(&out_path);
    assert_eq!(report["exit_status"], "fail");
    assert_eq!(report["failures"].as_array().unwrap().len(), 5);
}

#[test]
fn parse_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[[models]]\nbuilder = \"cigar\"\n\n[tolerances]\nalgebraic = 0.0\n");
    let out = verify(&bad, &dir.path().join("r.json"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.toml:5:"), "{stderr}");
    assert!(!dir.path().join("r.json").exists());

    let syntax = write(dir.path(), "syntax.toml", "[[models]]\nbuilder = cigar\n");
    let out = verify(&syntax, &dir.path().join("r.json"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("syntax.toml:2:"));

    let out = verify(&manifests().join("cigar.toml"), &dir.path().join("r.json"), &["--tol-elliptic", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn builder_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    for body in [
        "[[models]]\nbuilder = \"torus\"\n",
        "[[models]]\nbuilder = \"round_sphere\"\nparams = { a = -1 }\n",
        "[[models]]\nbuilder = \"cigar\"\nbounds = [[0.5, 1.0]]\n",
        "[[models]]\nwarped = { profile = \"sin\", scale = -2.0, fiber_dimension = 2, lambda = 1.0 }\n",
    ] {
        let m = write(dir.path(), "m.toml", body);
        let out = verify(&m, &dir.path().join("r.json"), &[]);
        assert_eq!(out.status.code(), Some(3), "{body}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifests().join("warped.toml");
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert!(verify(&m, &a, &[]).status.success());
    assert!(verify(&m, &b, &[]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // a different seed changes the grid but not the verdicts
    let c = dir.path().join("c.json");
    assert!(verify(&m, &c, &["--seed", "99"]).status.success());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
    assert_eq!(read_json(&c)["manifest"]["grid"]["seed"], 99);
}

#[test]
fn tolerance_flags_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let out = verify(&manifests().join("gaussian.toml"), &out_path, &["--tol-algebraic", "1e-6"]);
    assert!(out.status.success());
    let report = read_json(&out_path);
    assert_eq!(report["manifest"]["tolerances"]["algebraic"], 1e-6);
    assert_eq!(report["models"][0]["suites"][0]["reports"][0]["tolerance"], 1e-6);
}

#[test]
fn report_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let reports = dir.path().join("reports");
    let out = soliton()
        .arg("classify")
        .arg(manifests().join("warped.toml"))
        .env("SOLITON_REPORT_DIR", &reports)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&reports.join("warped.classify.json"));
    assert_eq!(report["command"], "classify");
    let labels: Vec<&str> = report["models"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["suites"][0]["classification"]["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["inconclusive", "S^{n−1}×ℝ-split"]);
}

#[test]
fn example_report_is_current() {
    // the checked-in example is regenerated from the example manifest
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    assert!(verify(&manifests().join("example.toml"), &out_path, &[]).status.success());
    let fresh = read_json(&out_path);
    let stored = read_json(&manifests().join("example-report.json"));
    assert_eq!(fresh["models"], stored["models"]);
    assert_eq!(fresh["schema_version"], stored["schema_version"]);
}
