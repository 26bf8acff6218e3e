//! Browser bindings. Every export takes a JSON config string and returns a
//! JSON string; errors surface as the same one-line messages the CLI prints.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use sideobs::bounds::{relaxed_bound, BoundBudget};
use sideobs::config::ConfigFile;
use sideobs::graph::classify;
use sideobs::harness::run_episode;

fn load(config: &str) -> Result<ConfigFile, String> {
    ConfigFile::from_json(config).map_err(|e| e.to_string())
}

pub fn classify_json(config: &str) -> Result<String, String> {
    let graph = load(config)?.graph().map_err(|e| e.to_string())?;
    let r = classify(&graph);
    Ok(json!({
        "regime": r.regime.name(),
        "kappa": r.independence_number,
        "rho": r.weak_domination_number,
        "strong_actions": r.strong_actions,
        "weak_actions": r.weak_actions,
        "witness_independent_set": r.independent_witness,
        "witness_dominating_set": r.dominating_witness,
    })
    .to_string())
}

/// Relaxed bound at `steps` log-spaced budgets in `[b_lo, b_hi]`.
pub fn bound_curve_json(config: &str, horizon: u64, b_lo: f64, b_hi: f64, steps: u32) -> Result<String, String> {
    if !(b_lo > 0.0 && b_hi >= b_lo) || steps < 2 {
        return Err("budget: need 0 < lo <= hi and at least 2 steps".into());
    }
    let env = load(config)?.environment().map_err(|e| e.to_string())?;
    let mut points = Vec::with_capacity(steps as usize);
    for s in 0..steps {
        let b = b_lo * (b_hi / b_lo).powf(s as f64 / (steps - 1) as f64);
        let budget = BoundBudget::new(b, horizon).map_err(|e| e.to_string())?;
        let r = relaxed_bound(&env, &budget).map_err(|e| e.to_string())?;
        let m: Vec<f64> = r.per_action.iter().map(|q| q.m).collect();
        points.push(json!({"budget": b, "b_prime": r.value, "status": r.status, "m": m}));
    }
    Ok(Value::Array(points).to_string())
}

/// One seeded episode of the config's algorithm at `horizon`.
pub fn simulate_json(config: &str, horizon: u64, seed: u64) -> Result<String, String> {
    let sim = load(config)?.simulation_at(horizon, None).map_err(|e| e.to_string())?;
    let trace = run_episode(&sim, seed).map_err(|e| format!("algorithm: {e}"))?;
    Ok(json!({"algorithm": sim.algorithm.label(), "seed": seed, "points": trace.points}).to_string())
}

#[wasm_bindgen(js_name = classify)]
pub fn classify_js(config: &str) -> Result<String, JsValue> {
    classify_json(config).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = boundCurve)]
pub fn bound_curve_js(config: &str, horizon: f64, b_lo: f64, b_hi: f64, steps: u32) -> Result<String, JsValue> {
    bound_curve_json(config, horizon as u64, b_lo, b_hi, steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(config: &str, horizon: f64, seed: f64) -> Result<String, JsValue> {
    simulate_json(config, horizon as u64, seed as u64).map_err(|e| JsValue::from_str(&e))
}
