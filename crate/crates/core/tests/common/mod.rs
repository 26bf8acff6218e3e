#![allow(dead_code)]

use rand::Rng;
use sideobs::{ActionSet, FeedbackGraph};

/// Random observation sets on `k` actions with edge probability `p`, patched
/// so that every action has at least one observer.
pub fn random_graph<R: Rng>(rng: &mut R, k: usize, p: f64) -> FeedbackGraph {
    let mut obs = vec![ActionSet::EMPTY; k];
    for s in obs.iter_mut() {
        for j in 0..k {
            if rng.random_bool(p) {
                s.insert(j);
            }
        }
    }
    for j in 0..k {
        if !obs.iter().any(|s| s.contains(j)) {
            let i = rng.random_range(0..k);
            obs[i].insert(j);
        }
    }
    FeedbackGraph::new(obs).expect("every action observed")
}

/// Nonempty random subset of `within`.
pub fn random_subset<R: Rng>(rng: &mut R, within: ActionSet) -> ActionSet {
    let members = within.to_vec();
    loop {
        let s: ActionSet = members.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

/// Grid maximum of `f` over `(lo, hi]` with the given step.
pub fn grid_max(lo: f64, hi: f64, step: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = ((hi - lo) / step).floor() as u64;
    let mut best = f(hi);
    for i in 1..=n {
        let x = lo + i as f64 * step;
        if x <= hi {
            best = best.max(f(x));
        }
    }
    best
}

pub fn report(id: u32, pass: bool, detail: &str) {
    println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
}
