use std::process::{Command, Output};

use serde_json::Value;

fn spinhall(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinhall")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn write_config(dir: &tempfile::TempDir, text: &str) -> String {
    let path = dir.path().join("run.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn conductivity_reports_unit_spin_chern() {
    let out = spinhall(&["conductivity", "--model", "km-rashba", "--delta-so", "0.5", "--lambda-r", "0.1"]);
    let v = json(&out);
    for key in ["sector_chern", "spin_chern", "sigma_sh_units_e_over_2pi", "quadrature_error", "convention", "config"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!((v["spin_chern"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    let lr = v["linear_response"]["sigma_sh_units_e_over_2pi"].as_f64().unwrap();
    assert!((lr - 1.0).abs() < 1e-3, "linear response {lr}");
}

#[test]
fn chern_without_rashba_has_half_integer_sectors() {
    let v = json(&spinhall(&["chern", "--delta-so", "0.5"]));
    let sectors = v["sector_chern"].as_object().unwrap();
    assert_eq!(sectors.len(), 4);
    for c in sectors.values() {
        assert!((c.as_f64().unwrap().abs() - 0.5).abs() < 1e-6);
    }
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&spinhall(&["spectrum", "--help"])), 0);
}

#[test]
fn unknown_subcommand_exits_two() {
    assert_eq!(code(&spinhall(&["bogus"])), 2);
}

#[test]
fn minimal_config_gets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(&dir, r#"{"model":"km-so","delta_so":0.5}"#);
    let v = json(&spinhall(&["chern", "--config", &path]));
    let cfg = &v["config"];
    assert_eq!(cfg["v_f"], 1.0);
    assert_eq!(cfg["hbar"], 1.0);
    assert_eq!(cfg["basis"], "fw");
}

#[test]
fn regime_violation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(&dir, r#"{"model":"km-rashba","delta_so":0.2,"lambda_r":0.15}"#);
    let out = spinhall(&["chern", "--config", &path]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(&dir, r#"{"delta_so":"#);
    assert_eq!(code(&spinhall(&["chern", "--config", &path])), 2);
}

#[test]
fn flag_overrides_file_and_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(&dir, r#"{"model":"km-rashba","delta_so":0.5,"lambda_r":0.1}"#);
    let v = json(&spinhall(&["chern", "--config", &path, "--lambda-r", "0.05"]));
    assert_eq!(v["config"]["lambda_r"], 0.05);
    assert_eq!(v["config"]["delta_so"], 0.5);
}

#[test]
fn output_is_deterministic() {
    let args = ["spectrum", "--delta-so", "0.4", "--lambda-r", "0.1", "--model", "km-rashba", "--points", "11"];
    let a = spinhall(&args);
    let b = spinhall(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn csv_carries_metadata_and_header() {
    let out = spinhall(&["curvature", "--delta-so", "0.5", "--points", "5"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config: {"));
    assert!(lines[1].starts_with("# convention: {"));
    assert_eq!(lines[2], "px,py,G_up_K,G_down_K,G_up_Kp,G_down_Kp");
    assert_eq!(lines.len(), 3 + 25);
}

#[test]
fn output_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.csv");
    let out = spinhall(&["spectrum", "--delta-so", "0.5", "--points", "3", "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("px,py,E1,E2,E3,E4"));
}

#[test]
fn trajectory_accepts_field_pairs() {
    let out = spinhall(&["trajectory", "--delta-so", "0.5", "--e-field", "-0.1,0", "--p0", "0.3,0", "--t-end", "1"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[0] - 1.0).abs() < 1e-12);
    // p evolves by eE t
    assert!((last[3] - 0.2).abs() < 1e-6, "px {}", last[3]);
}

#[test]
fn bad_pair_exits_two() {
    assert_eq!(code(&spinhall(&["trajectory", "--delta-so", "0.5", "--e-field", "0.1"])), 2);
}

#[test]
fn phi_basis_is_rejected_for_transport() {
    let out = spinhall(&["chern", "--model", "km-rashba", "--basis", "phi", "--delta-so", "0.5", "--lambda-r", "0.1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn single_passing_check_exits_zero() {
    let out = spinhall(&["check", "--quick", "--only", "hermiticity"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS model/hermiticity"));
}

#[test]
fn unknown_check_exits_two() {
    assert_eq!(code(&spinhall(&["check", "--only", "nope"])), 2);
}
