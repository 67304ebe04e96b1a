use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eigencrofton"));
    c.env_remove("EIGENCROFTON_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_prints_small_residuals() {
    let o = run(&["bases", "verify", "--model", "torus", "--a", "2", "--frequency", "1,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["unsold_max_residual"].as_f64().unwrap() < 1e-8);
    assert!(v["trace_residual"].as_f64().unwrap() < 1e-6);
    let b: Vec<f64> = serde_json::from_value(v["betas"].clone()).unwrap();
    assert!((b[0] - 1.0).abs() < 1e-6 && (b[1] - 4.0).abs() < 1e-6);
}

#[test]
fn sphere_betas_are_flat() {
    let o = run(&["bases", "verify", "--model", "sphere2", "--l", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for b in v["betas"].as_array().unwrap() {
        assert!((b.as_f64().unwrap() - 6.0).abs() < 1e-6);
    }
}

#[test]
fn incomplete_basis_is_a_config_error() {
    let o = run(&["bases", "verify", "--model", "sphere2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["bases", "verify", "--model", "torus", "--frequency", "1,1,1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["bases", "verify", "--model", "torus", "--l", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn embed_check_reports_prediction_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("embed.json");
    let o = run(&[
        "embed", "check", "--model", "torus", "--a", "2", "--frequency", "1,1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&out);
    let pi = std::f64::consts::PI;
    assert!((v["predicted_average"].as_f64().unwrap() - 2.0 * pi).abs() < 1e-9);
    assert!((v["weyl_bound"].as_f64().unwrap() - 2.5 * pi).abs() < 1e-9);
    assert_eq!(v["N"].as_u64(), Some(4));
}

#[test]
fn average_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = run(&[
        "average", "zeros", "--model", "circle", "--l", "5", "--trials", "20", "--seed", "3", "--out",
        out.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("EqualityConfirmed"));
    let v = json(&out);
    assert_eq!(v["estimate"].as_f64(), Some(10.0));
    assert_eq!(v["seed"].as_u64(), Some(3));
    assert!(v["config_hash"].as_str().unwrap().len() >= 16);
    assert!(v["code_version"].is_string());
    let lines = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(lines.lines().count(), 21);
    assert!(lines.starts_with("trial,status,value"));
}

#[test]
fn average_needs_seed_and_trials() {
    let o = run(&["average", "zeros", "--model", "circle", "--l", "5", "--trials", "20"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["average", "zeros", "--model", "circle", "--l", "5", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "trials = 10\nseed = 1\n[model]\nkind = \"circle\"\n[basis]\nl = 2\n").unwrap();
    let out = dir.path().join("r.json");
    let o = run(&[
        "average", "zeros", "--config", cfg.to_str().unwrap(), "--l", "4", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["estimate"].as_f64(), Some(8.0));
    assert_eq!(v["trials"].as_u64(), Some(10));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "trials = 10\nseed = 1\ntrails = 3\n[model]\nkind = \"circle\"\n").unwrap();
    let o = run(&["average", "zeros", "--config", cfg.to_str().unwrap(), "--l", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn local_and_degenerate_runs() {
    let o = run(&[
        "average", "local", "--model", "sphere2", "--l", "2", "--region", "hemisphere", "--trials", "100",
        "--seed", "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[
        "average", "degenerate", "--model", "torus", "--a", "2", "--frequency", "1,0", "--trials", "50",
        "--seed", "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["average", "zeros", "--model", "torus", "--frequency", "1,1", "--region", "bogus", "--trials", "5", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mesh_then_crofton() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("g.mesh");
    let o = run(&["crofton", "mesh", "--kind", "great-circle", "--segments", "64", "--out", mesh.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = dir.path().join("c.json");
    let o = run(&[
        "crofton", "run", "--mesh", mesh.to_str().unwrap(), "--trials", "500", "--seed", "9", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["estimate"].as_f64(), Some(2.0));
    assert_eq!(v["stderr"].as_f64(), Some(0.0));
}

#[test]
fn malformed_mesh_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("bad.mesh");
    std::fs::write(&mesh, "3 1\nv 1 0 0\nv 0 2 0\nc 0 1\n").unwrap();
    let o = run(&["crofton", "run", "--mesh", mesh.to_str().unwrap(), "--trials", "5", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn suite_requires_seed() {
    let o = run(&["suite", "run", "suites/acceptance.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_suite_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("empty.toml");
    std::fs::write(&s, "").unwrap();
    let o = run(&["suite", "run", s.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn impossible_expectation_fails_the_suite() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("wrong.toml");
    std::fs::write(
        &s,
        r#"
[[experiment]]
name = "torus a=2"
expect = "EqualityConfirmed"
trials = 2000
[experiment.model]
kind = "torus"
a = 2.0
[experiment.basis]
frequency = [1, 1]

[[experiment]]
name = "circle"
expect = "EqualityConfirmed"
trials = 10
[experiment.model]
kind = "circle"
[experiment.basis]
l = 1
"#,
    )
    .unwrap();
    let o = run(&["suite", "run", s.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let table = stdout(&o);
    let row = |name: &str| table.lines().find(|l| l.starts_with(name)).unwrap().to_string();
    assert!(row("torus a=2").contains("FAIL"));
    assert!(row("circle").contains("pass"));
}

#[test]
fn acceptance_suite_passes() {
    let suite = concat!(env!("CARGO_MANIFEST_DIR"), "/suites/acceptance.toml");
    let o = run(&["suite", "run", suite, "--seed", "20240601"]);
    let table = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{table}");
    assert_eq!(table.lines().filter(|l| l.ends_with("pass")).count(), 10, "{table}");
}
