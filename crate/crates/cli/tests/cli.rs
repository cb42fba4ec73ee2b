use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn multiplier(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiplier"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn body(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn summary(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const DHO: &str = r#"{"problem": "dho", "params": {"m": 1, "k": 5, "gamma": 0.5}, "N": 200, "T": 10, "mode": "run"}"#;

#[test]
fn dho_run_conserves_and_writes_the_step_table() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "dho.json", DHO);
    let out = multiplier(tmp.path(), &["run", "dho.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    let csv = fs::read_to_string(tmp.path().join("o/dho_run.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# multiplier "));
    assert!(lines.next().unwrap().starts_with("# generated: "));
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert_eq!(
        lines.next().unwrap(),
        "step,time,component,total_density,boundary_flux_sum,divergence_residual,newton_iters,residual_norm"
    );
    assert_eq!(lines.count(), 200);

    let s = summary(&tmp.path().join("o/dho_run_summary.json"));
    assert_eq!(s["passed"], true);
    let spread = s["runs"][0]["densities"][0]["spread"].as_f64().unwrap();
    assert!(spread <= 1e-11, "{spread}");
    assert_eq!(s["config"]["solver"]["residual_tol"], 1e-12);
    assert_eq!(s["config"]["solver"]["max_iters"], 50);
}

#[test]
fn numbers_carry_seventeen_significant_digits() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "dho.json", DHO);
    multiplier(tmp.path(), &["run", "dho.json"]);
    let b = body(&tmp.path().join("dho_run.csv"));
    let row = b.lines().nth(2).unwrap();
    let total = row.split(',').nth(3).unwrap();
    let mantissa = total.split('e').next().unwrap();
    assert_eq!(mantissa.replace(['.', '-'], "").len(), 17, "{total}");
}

#[test]
fn bodies_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "dho.json", DHO);
    multiplier(tmp.path(), &["run", "dho.json", "--out", "a"]);
    multiplier(tmp.path(), &["run", "dho.json", "--out", "b"]);
    assert_eq!(body(&tmp.path().join("a/dho_run.csv")), body(&tmp.path().join("b/dho_run.csv")));
}

#[test]
fn a_run_is_reproducible_from_its_own_header() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "b.json", r#"{"problem": "burgers", "params": {"p": 2}, "N": 20, "T": 0.2}"#);
    let first = multiplier(tmp.path(), &["run", "b.json", "--out", "a"]);
    assert_eq!(first.status.code(), Some(0));
    let again = multiplier(tmp.path(), &["run", "a/burgers_run.csv", "--out", "b"]);
    assert_eq!(again.status.code(), Some(0), "{}", String::from_utf8_lossy(&again.stderr));
    assert_eq!(body(&tmp.path().join("a/burgers_run.csv")), body(&tmp.path().join("b/burgers_run.csv")));
}

#[test]
fn unknown_keys_exit_with_the_key_named() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.json", r#"{"problem": "dho", "sigma_xx": 1}"#);
    let out = multiplier(tmp.path(), &["run", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma_xx"));
}

#[test]
fn type_mismatches_report_the_path() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.json", r#"{"problem": "dho", "solver": {"residual_tol": "small"}}"#);
    let out = multiplier(tmp.path(), &["run", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.residual_tol"));
}

#[test]
fn dotted_flags_override_config_keys() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "dho.json", DHO);
    let out = multiplier(tmp.path(), &["run", "dho.json", "--solver.residual_tol=1e-13", "--set", "N=100"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&tmp.path().join("dho_run_summary.json"));
    assert_eq!(s["config"]["solver"]["residual_tol"], 1e-13);
    assert_eq!(s["config"]["N"], 100);
}

#[test]
fn dho_convergence_table_and_merged_sub_runs() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.json",
        r#"{"problem": "dho", "params": {"m": 1, "k": 5, "gamma": 0.5}, "T": 10, "convergence": {"steps": [100, 200, 400, 800]}}"#,
    );
    let out = multiplier(tmp.path(), &["convergence", "c.json", "--out", "a"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    multiplier(tmp.path(), &["convergence", "c.json", "--out", "b"]);

    let table = body(&tmp.path().join("a/dho_convergence_table.csv"));
    assert!(table.starts_with("quantity,resolution,error,order\n"));
    let orders: Vec<f64> = table
        .lines()
        .skip(1)
        .filter_map(|l| l.rsplit(',').next().unwrap().parse().ok())
        .collect();
    assert_eq!(orders.len(), 6);
    for o in [orders[2], orders[5]] {
        assert!((o - 2.0).abs() < 0.1, "{o}");
    }

    let merged = body(&tmp.path().join("a/dho_convergence.csv"));
    assert!(merged.starts_with("sub_run,steps,step,time,"));
    assert_eq!(merged.lines().count(), 1 + 100 + 200 + 400 + 800);
    let subs: Vec<&str> = merged.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert!(subs.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(merged, body(&tmp.path().join("b/dho_convergence.csv")));
    assert!(!tmp.path().join("a/dho_convergence.parts").exists());
}

#[test]
fn kdv_self_convergence() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "k.json", r#"{"problem": "kdv", "N": 16, "T": 1}"#);
    let out = multiplier(tmp.path(), &["convergence", "k.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(&tmp.path().join("kdv_convergence_summary.json"));
    assert_eq!(s["config"]["convergence"]["reference"], "self");
    assert_eq!(s["config"]["convergence"]["refinement"], "joint");
}

#[test]
fn identity_on_every_problem_passes() {
    let tmp = TempDir::new().unwrap();
    let out = multiplier(tmp.path(), &["identity"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.matches(" identity: PASS").count(), 10);
    assert!(fs::read_dir(tmp.path()).unwrap().next().is_none());
}

#[test]
fn identity_for_one_problem_writes_files_on_request() {
    let tmp = TempDir::new().unwrap();
    let out = multiplier(tmp.path(), &["identity", "--problem", "shallow_water", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("o/shallow_water_identity_table.csv").exists());
}

#[test]
fn consistency_reports_declared_order() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "p.json", r#"{"problem": "pendulum"}"#);
    let out = multiplier(tmp.path(), &["consistency", "p.json"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&tmp.path().join("pendulum_consistency_summary.json"));
    assert_eq!(s["checks"][0]["passed"], true);
    assert_eq!(s["config"]["checks"]["order"], 2.0);
}

#[test]
fn divergence_on_a_bounded_mesh() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "b.json",
        r#"{"problem": "burgers", "grid": {"boundary": "boundary", "extent": [40]}, "N": 50, "T": 0.5}"#,
    );
    let out = multiplier(tmp.path(), &["divergence", "b.json"]);
    assert_eq!(out.status.code(), Some(0));
    let b = body(&tmp.path().join("burgers_divergence.csv"));
    let flux: Vec<f64> = b.lines().skip(2).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert!(flux.iter().any(|f| f.abs() > 1e-3));
}

#[test]
fn step_rejection_exits_nonzero_with_the_step() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "r.json",
        r#"{"problem": "pendulum", "N": 20, "T": 10, "solver": {"max_iters": 1, "predictor": "copy"}}"#,
    );
    let out = multiplier(tmp.path(), &["run", "r.json"]);
    assert_eq!(out.status.code(), Some(1));
    let s = summary(&tmp.path().join("pendulum_run_summary.json"));
    let failure = &s["runs"][0]["failure"];
    assert_eq!(failure["step"], 2);
    assert!(failure["reason"].as_str().unwrap().starts_with("nonconvergence"));
}

#[test]
fn failed_checks_exit_nonzero() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "dho.json", DHO);
    let out = multiplier(tmp.path(), &["run", "dho.json", "--checks.max_spread=1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL] spread"));
}

#[test]
fn subcommand_and_config_mode_must_agree() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "dho.json", DHO);
    let out = multiplier(tmp.path(), &["convergence", "dho.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn list_problems_as_json() {
    let tmp = TempDir::new().unwrap();
    let out = multiplier(tmp.path(), &["list-problems", "--json"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names.len(), 10);
    assert!(names.contains(&"shallow_water"));
}
