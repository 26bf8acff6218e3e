use serde_json::Value;
use sideobs_wasm::{bound_curve_json, classify_json, simulate_json};

const WEAK: &str = r#"{"D": 1.0, "theta": [0.5, 0.4, 0.1],
    "sigma": [["inf", 0.3, 0.3], [0.3, 0.3, "inf"], ["inf", "inf", "inf"]],
    "algorithm": {"name": "uniform"}}"#;

#[test]
fn classify_reports_regime() {
    let v: Value = serde_json::from_str(&classify_json(WEAK).unwrap()).unwrap();
    assert_eq!(v["regime"], "WeaklyObservable");
    assert!(classify_json("{").unwrap_err().starts_with("config:"));
}

#[test]
fn bound_curve_is_monotone() {
    let v: Value = serde_json::from_str(&bound_curve_json(WEAK, 10_000, 1.0, 1000.0, 6).unwrap()).unwrap();
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 6);
    assert!((pts[5]["budget"].as_f64().unwrap() - 1000.0).abs() < 1e-9);
    let vals: Vec<f64> = pts.iter().filter_map(|p| p["b_prime"].as_f64()).collect();
    assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    assert!(bound_curve_json(WEAK, 100, 5.0, 1.0, 3).is_err());
}

#[test]
fn simulate_is_seeded() {
    let a = simulate_json(WEAK, 300, 7).unwrap();
    assert_eq!(a, simulate_json(WEAK, 300, 7).unwrap());
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["points"].as_array().unwrap().last().unwrap()[0], 300);
}
