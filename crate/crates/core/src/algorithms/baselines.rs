use crate::error::AlgorithmError;
use crate::graph::FeedbackGraph;
use crate::model::{gaps, ObservationSample, VarianceMatrix};

use super::{Estimates, Policy};

/// Lowest index maximizing `score`; NaN never wins.
fn argmax(score: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in score.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Plays the highest sample mean; needs every pair observable.
#[derive(Debug, Clone)]
pub struct Greedy {
    estimates: Estimates,
}

impl Greedy {
    pub fn new(sigma: &VarianceMatrix) -> Result<Self, AlgorithmError> {
        if !sigma.is_generalized_full_information() {
            return Err(AlgorithmError::Incompatible(
                "sigma: algorithm greedy requires every entry to be finite".into(),
            ));
        }
        Ok(Self {
            estimates: Estimates::new(sigma.k()),
        })
    }
}

impl Policy for Greedy {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn select(&mut self) -> Result<usize, AlgorithmError> {
        let e = &self.estimates;
        Ok(argmax((0..e.n_obs.len()).map(|i| e.mean(i).unwrap_or(f64::INFINITY))))
    }

    fn update(&mut self, sample: &ObservationSample) {
        self.estimates.record(sample);
    }
}

/// UCB1 with Gaussian radius `sigma sqrt(2 ln t / N_i)`; bandit feedback only.
#[derive(Debug, Clone)]
pub struct Ucb {
    sigma: f64,
    estimates: Estimates,
    t: u64,
}

impl Ucb {
    pub fn new(sigma: &VarianceMatrix) -> Result<Self, AlgorithmError> {
        let graph = FeedbackGraph::from_sigma(sigma)?;
        if !graph.is_bandit() {
            return Err(AlgorithmError::Incompatible(
                "sigma: algorithm ucb requires bandit feedback (finite entries only on the diagonal)".into(),
            ));
        }
        let s = sigma.max_finite().unwrap_or(0.0);
        Ok(Self {
            sigma: s,
            estimates: Estimates::new(sigma.k()),
            t: 1,
        })
    }
}

impl Policy for Ucb {
    fn name(&self) -> &'static str {
        "ucb"
    }

    fn select(&mut self) -> Result<usize, AlgorithmError> {
        let ln_t = (self.t as f64).ln();
        let e = &self.estimates;
        Ok(argmax((0..e.n_obs.len()).map(|i| match e.mean(i) {
            None => f64::INFINITY,
            Some(m) => m + self.sigma * (2.0 * ln_t / e.n_obs[i] as f64).sqrt(),
        })))
    }

    fn update(&mut self, sample: &ObservationSample) {
        self.estimates.record(sample);
        self.t += 1;
    }
}

/// Cycles through the actions in index order.
#[derive(Debug, Clone)]
pub struct Uniform {
    k: usize,
    next: usize,
}

impl Uniform {
    pub fn new(k: usize) -> Self {
        Self { k, next: 0 }
    }
}

impl Policy for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn select(&mut self) -> Result<usize, AlgorithmError> {
        let i = self.next;
        self.next = (self.next + 1) % self.k;
        Ok(i)
    }

    fn update(&mut self, _sample: &ObservationSample) {}
}

/// Always plays the true best action.
#[derive(Debug, Clone)]
pub struct Oracle {
    best: usize,
}

impl Oracle {
    pub fn new(theta: &[f64]) -> Self {
        Self { best: gaps(theta).best }
    }
}

impl Policy for Oracle {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn select(&mut self) -> Result<usize, AlgorithmError> {
        Ok(self.best)
    }

    fn update(&mut self, _sample: &ObservationSample) {}
}
