//! Seeded episode driver, replicated batches and regret-growth sweeps.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::algorithms::Policy;
use crate::config::{ConfigError, ConfigFile, SimConfig};
use crate::error::AlgorithmError;
use crate::model::Environment;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("algorithm: {0}")]
    Algorithm(#[from] AlgorithmError),
    #[error("horizons: {0}")]
    Horizons(String),
    #[error("output: {0}")]
    Csv(#[from] csv::Error),
}

/// Cumulative pseudo-regret of one episode at each checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretTrace {
    pub seed: u64,
    pub points: Vec<(u64, f64)>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointStats {
    pub t: u64,
    pub mean: f64,
    /// Sample standard deviation; zero for a single replication.
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub checkpoints: Vec<CheckpointStats>,
    pub fitted_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub algorithm: &'static str,
    pub env_id: String,
    pub stats: SummaryStats,
    pub traces: Vec<RegretTrace>,
}

/// Plays `policy` for `horizon` rounds and records regret at `checkpoints`.
pub fn run_policy<P: Policy + ?Sized, R: Rng + ?Sized>(
    policy: &mut P,
    env: &Environment,
    horizon: u64,
    checkpoints: &[u64],
    rng: &mut R,
) -> Result<Vec<(u64, f64)>, AlgorithmError> {
    let gaps = env.gaps();
    let mut regret = 0.0;
    let mut points = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().copied().filter(|&c| c <= horizon).peekable();
    for t in 1..=horizon {
        let action = policy.select()?;
        regret += gaps.regret_of(action);
        policy.update(&env.sample_observation(action, rng));
        if next.peek() == Some(&t) {
            points.push((t, regret));
            next.next();
        }
    }
    Ok(points)
}

pub fn run_episode(config: &SimConfig, seed: u64) -> Result<RegretTrace, AlgorithmError> {
    let mut policy = config.algorithm.build(&config.env)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = run_policy(policy.as_mut(), &config.env, config.horizon, &config.checkpoints, &mut rng)?;
    Ok(RegretTrace { seed, points })
}

fn replicate(config: &SimConfig) -> Result<Vec<RegretTrace>, AlgorithmError> {
    let seeds: Vec<u64> = (0..config.replications as u64).map(|i| config.seed.wrapping_add(i)).collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| run_episode(config, s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(|&s| run_episode(config, s)).collect()
    }
}

/// Per-checkpoint statistics across traces sharing one checkpoint grid.
pub fn summarize(traces: &[RegretTrace]) -> Vec<CheckpointStats> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    (0..first.points.len())
        .map(|c| {
            let values: Vec<f64> = traces.iter().map(|tr| tr.points[c].1).collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std_dev = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            CheckpointStats {
                t: first.points[c].0,
                mean,
                std_dev,
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Runs `replications` episodes with seeds `seed, seed + 1, ...`, in parallel
/// when enabled; traces come back in replication order.
pub fn run_batch(config: &SimConfig) -> Result<BatchResult, AlgorithmError> {
    let traces = replicate(config)?;
    Ok(BatchResult {
        algorithm: config.algorithm.label(),
        env_id: config.env_id.clone(),
        stats: SummaryStats {
            checkpoints: summarize(&traces),
            fitted_exponent: None,
        },
        traces,
    })
}

/// Least-squares slope of `ln y` against `ln x`. Undefined with fewer than
/// three points or any nonpositive coordinate.
pub fn fit_exponent(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub batches: Vec<BatchResult>,
    pub horizons: Vec<u64>,
    pub mean_final_regret: Vec<f64>,
    pub fitted_exponent: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary<'a> {
    pub algorithm: &'static str,
    pub env_id: &'a str,
    pub horizons: &'a [u64],
    pub mean_final_regret: &'a [f64],
    pub fitted_exponent: Option<f64>,
}

impl SweepResult {
    pub fn summary(&self) -> SweepSummary<'_> {
        let first = &self.batches[0];
        SweepSummary {
            algorithm: first.algorithm,
            env_id: first.env_id.split("/T").next().unwrap_or(""),
            horizons: &self.horizons,
            mean_final_regret: &self.mean_final_regret,
            fitted_exponent: self.fitted_exponent,
        }
    }
}

/// Runs one batch per horizon (default checkpoint grids) and fits the growth
/// exponent of the mean final regret.
pub fn scaling_sweep(file: &ConfigFile, horizons: &[u64]) -> Result<SweepResult, HarnessError> {
    if horizons.len() < 3 {
        return Err(HarnessError::Horizons(format!("need at least 3 horizons, got {}", horizons.len())));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Horizons("must be strictly increasing".into()));
    }
    let mut batches = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let mut cfg = file.simulation_at(h, None)?;
        cfg.env_id = format!("{}/T{h}", cfg.env_id);
        batches.push(run_batch(&cfg)?);
    }
    let mean_final_regret: Vec<f64> = batches
        .iter()
        .map(|b| b.stats.checkpoints.last().map_or(0.0, |c| c.mean))
        .collect();
    let fit: Vec<(f64, f64)> = horizons.iter().zip(&mean_final_regret).map(|(&h, &r)| (h as f64, r)).collect();
    Ok(SweepResult {
        batches,
        horizons: horizons.to_vec(),
        mean_final_regret,
        fitted_exponent: fit_exponent(&fit),
    })
}

/// Writes `algorithm,env_id,seed,t,cum_pseudo_regret` rows for every trace.
pub fn write_csv<W: Write>(out: W, batches: &[BatchResult]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "env_id", "seed", "t", "cum_pseudo_regret"])?;
    for b in batches {
        for tr in &b.traces {
            for &(t, r) in &tr.points {
                w.write_record([b.algorithm, &b.env_id, &tr.seed.to_string(), &t.to_string(), &r.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::AlgorithmSpec;
    use crate::config::default_checkpoints;
    use crate::model::VarianceMatrix;

    fn sim(theta: Vec<f64>, algorithm: AlgorithmSpec, horizon: u64, replications: usize) -> SimConfig {
        let sigma = VarianceMatrix::bandit(theta.len(), 1.0).unwrap();
        SimConfig {
            env: Environment::new(theta, 1.0, sigma.clone()).unwrap(),
            env_id: "t".into(),
            algorithm,
            horizon,
            replications,
            seed: 3,
            checkpoints: default_checkpoints(horizon),
            adversarial: None,
            sigma,
        }
    }

    #[test]
    fn oracle_has_zero_regret() {
        let tr = run_episode(&sim(vec![0.7, 0.4], AlgorithmSpec::Oracle, 500, 1), 0).unwrap();
        assert!(tr.points.iter().all(|p| p.1 == 0.0));
    }

    #[test]
    fn uniform_regret_is_exact() {
        let b = run_batch(&sim(vec![0.7, 0.4], AlgorithmSpec::Uniform, 1000, 3)).unwrap();
        let last = b.stats.checkpoints.last().unwrap();
        assert_eq!(last.t, 1000);
        assert!((last.mean - 150.0).abs() < 1e-9);
        assert_eq!(last.std_dev, 0.0);
    }

    #[test]
    fn single_replication_stats_equal_trace() {
        let b = run_batch(&sim(vec![0.7, 0.4, 0.2], AlgorithmSpec::Ucb, 300, 1)).unwrap();
        for (c, p) in b.stats.checkpoints.iter().zip(&b.traces[0].points) {
            assert_eq!((c.t, c.mean, c.min, c.max), (p.0, p.1, p.1, p.1));
        }
    }

    #[test]
    fn exponent_fit_recovers_powers() {
        let hs = [1e3_f64, 3e3, 1e4, 3e4, 1e5];
        let lin: Vec<_> = hs.iter().map(|&h| (h, 0.25 * h)).collect();
        let root: Vec<_> = hs.iter().map(|&h| (h, 3.0 * h.sqrt())).collect();
        assert!((fit_exponent(&lin).unwrap() - 1.0).abs() < 1e-6);
        assert!((fit_exponent(&root).unwrap() - 0.5).abs() < 1e-6);
        assert_eq!(fit_exponent(&[(1.0, 0.0), (2.0, 1.0), (3.0, 2.0)]), None);
        assert_eq!(fit_exponent(&lin[..2]), None);
    }

    #[test]
    fn csv_is_deterministic() {
        let cfg = sim(vec![0.6, 0.5, 0.1], AlgorithmSpec::Ucb, 400, 4);
        let render = || {
            let mut buf = Vec::new();
            write_csv(&mut buf, &[run_batch(&cfg).unwrap()]).unwrap();
            buf
        };
        let a = render();
        assert_eq!(a, render());
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("algorithm,env_id,seed,t,cum_pseudo_regret\nucb,t,3,1,"));
    }
}
