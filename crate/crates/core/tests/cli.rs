use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BANDIT: &str = r#"{"D": 1.0, "theta": [0.7, 0.4, 0.2], "sigma": [[1.0, "inf", "inf"], ["inf", 1.0, "inf"], ["inf", "inf", 1.0]],
    "algorithm": {"name": "uniform"}, "horizon": 999, "replications": 2, "seed": 0}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sideobs"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn setup(files: &[(&str, &str)]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in files {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

#[test]
fn classify_bandit() {
    let dir = setup(&[("c.json", BANDIT)]);
    let out = run(dir.path(), &["classify", "--config", "c.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["regime"], "StronglyObservable");
    assert_eq!(v["kappa"], 3);
    assert_eq!(v["rho"], 0);
}

#[test]
fn infeasible_bound_is_a_result() {
    let dir = setup(&[("c.json", BANDIT)]);
    let out = run(dir.path(), &["bounds", "--config", "c.json", "--budget", "1e-9", "--horizon", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["status"], "Infeasible");
    assert!(v["b_prime"].is_null());
}

#[test]
fn bounds_with_asymptotic_program() {
    let dir = setup(&[("c.json", BANDIT)]);
    let out = run(dir.path(), &["bounds", "--config", "c.json", "--budget", "50", "--horizon", "100000", "--asymptotic"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "Optimal");
    assert_eq!(v["per_action"].as_array().unwrap().len(), 3);
    // 2/0.09 * 0.3 + 2/0.25 * 0.5
    let expected = 2.0 / 0.09 * 0.3 + 2.0 / 0.25 * 0.5;
    assert!((v["asymptotic_value"].as_f64().unwrap() - expected).abs() < 1e-9);
}

#[test]
fn theta_length_mismatch_exits_1() {
    let dir = setup(&[("c.json", &BANDIT.replace("[0.7, 0.4, 0.2]", "[0.7, 0.4]"))]);
    let out = run(dir.path(), &["simulate", "--config", "c.json", "--out", "o.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("theta: expected 3 entries"), "{err}");
    assert!(!dir.path().join("o.csv").exists());
}

#[test]
fn malformed_inputs_exit_1() {
    let dir = setup(&[
        ("bad.json", "{\"D\": 1.0, \"theta\": [0.5"),
        ("neg.json", &BANDIT.replace("[1.0, \"inf\", \"inf\"]", "[-1.0, \"inf\", \"inf\"]")),
        ("alg.json", &BANDIT.replace("\"uniform\"", "\"greedy\"")),
    ]);
    for (file, needle) in [("bad.json", "config:"), ("neg.json", "sigma:"), ("alg.json", "algorithm:"), ("missing.json", "missing.json")] {
        let out = run(dir.path(), &["simulate", "--config", file, "--out", "o.csv"]);
        assert_eq!(out.status.code(), Some(1), "{file}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.contains(needle), "{file}: {err}");
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = setup(&[]);
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["bounds", "--config", "c.json"]).status.code(), Some(2));
    assert_eq!(
        run(dir.path(), &["adversarial", "--config", "c.json", "--regime", "medium", "--horizon", "10", "--alpha", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_writes_exact_uniform_regret() {
    let dir = setup(&[("c.json", BANDIT)]);
    let out = run(dir.path(), &["simulate", "--config", "c.json", "--out", "o.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("o.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("algorithm,env_id,seed,t,cum_pseudo_regret"));
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    assert_eq!(&last[..4], &["uniform", "env", "1", "999"]);
    // 333 plays each of gaps 0.3 and 0.5
    assert!((last[4].parse::<f64>().unwrap() - 333.0 * 0.8).abs() < 1e-9);
}

#[test]
fn sweep_needs_three_horizons() {
    let dir = setup(&[("c.json", BANDIT)]);
    let out = run(dir.path(), &["sweep", "--config", "c.json", "--horizons", "100,200", "--out", "s.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(dir.path(), &["sweep", "--config", "c.json", "--horizons", "100,200,400", "--out", "s.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["fitted_exponent"].as_f64().unwrap() - 1.0).abs() < 0.01);
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(csv.contains("uniform,env/T400,1,400,"));
}

#[test]
fn adversarial_regime_mismatch_exits_1() {
    let dir = setup(&[("c.json", BANDIT)]);
    let out = run(dir.path(), &["adversarial", "--config", "c.json", "--regime", "weak", "--horizon", "100000", "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(dir.path(), &["adversarial", "--config", "c.json", "--regime", "strong", "--horizon", "100000", "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["construction"], "IndependentSet");
    assert_eq!(v["theta"][0], 0.5);
}
