//! Learning algorithms for uniform-variance graph feedback, plus baselines.
//!
//! Every algorithm implements [`Policy`]: the episode driver asks for an
//! action, samples the environment, and hands the observation vector back.

mod alg1;
mod alg2;
mod baselines;

pub use alg1::{in_c_theta, Alg1, Alg1Branch, ExplorationSchedule};
pub use alg2::{confidence_radius, Alg2, Alg2Branch, Alg2State, PlayBatch, RoundPlan};
pub use baselines::{Greedy, Oracle, Ucb, Uniform};

use serde::{Deserialize, Serialize};

use crate::error::AlgorithmError;
use crate::graph::FeedbackGraph;
use crate::model::{Environment, ObservationSample};

pub trait Policy {
    fn name(&self) -> &'static str;

    /// Chooses the action for the next round.
    fn select(&mut self) -> Result<usize, AlgorithmError>;

    /// Receives the observation vector generated by the last selected action.
    fn update(&mut self, sample: &ObservationSample);
}

/// Per-action sample counts and running sums of every observation received.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub n_obs: Vec<u64>,
    pub sums: Vec<f64>,
}

impl Estimates {
    pub fn new(k: usize) -> Self {
        Self {
            n_obs: vec![0; k],
            sums: vec![0.0; k],
        }
    }

    pub fn record(&mut self, sample: &ObservationSample) {
        for (j, x) in sample.observed() {
            self.n_obs[j] += 1;
            self.sums[j] += x;
        }
    }

    /// Sample mean of action `i`, or `None` before its first observation.
    pub fn mean(&self, i: usize) -> Option<f64> {
        (self.n_obs[i] > 0).then(|| self.sums[i] / self.n_obs[i] as f64)
    }

    /// Sample means with unobserved actions at zero.
    pub fn means(&self) -> Vec<f64> {
        (0..self.n_obs.len()).map(|i| self.mean(i).unwrap_or(0.0)).collect()
    }
}

/// Algorithm choice and parameters as they appear in a simulation config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Alg1 {
        alpha: f64,
        #[serde(default = "default_schedule_a")]
        a: f64,
        #[serde(default = "default_schedule_b")]
        b: f64,
    },
    Alg2 {
        delta: f64,
    },
    Greedy,
    Ucb,
    Uniform,
    Oracle,
}

fn default_schedule_a() -> f64 {
    0.5
}

fn default_schedule_b() -> f64 {
    0.5
}

impl AlgorithmSpec {
    pub fn label(&self) -> &'static str {
        match self {
            AlgorithmSpec::Alg1 { .. } => "alg1",
            AlgorithmSpec::Alg2 { .. } => "alg2",
            AlgorithmSpec::Greedy => "greedy",
            AlgorithmSpec::Ucb => "ucb",
            AlgorithmSpec::Uniform => "uniform",
            AlgorithmSpec::Oracle => "oracle",
        }
    }

    /// Checks parameters and structural compatibility with `env` without
    /// building anything.
    pub fn check(&self, env: &Environment) -> Result<(), AlgorithmError> {
        self.build(env).map(|_| ())
    }

    pub fn build(&self, env: &Environment) -> Result<Box<dyn Policy + Send>, AlgorithmError> {
        let graph = FeedbackGraph::from_sigma(&env.sigma)?;
        let uniform = || {
            env.sigma.uniform_sigma().ok_or_else(|| {
                AlgorithmError::Incompatible(format!(
                    "sigma: algorithm {} requires uniform finite variances",
                    self.label()
                ))
            })
        };
        Ok(match *self {
            AlgorithmSpec::Alg1 { alpha, a, b } => {
                let schedule = ExplorationSchedule::new(a, b)?;
                Box::new(Alg1::new(graph, uniform()?, alpha, schedule)?)
            }
            AlgorithmSpec::Alg2 { delta } => Box::new(Alg2::new(graph, uniform()?, env.d_cap, delta)?),
            AlgorithmSpec::Greedy => Box::new(Greedy::new(&env.sigma)?),
            AlgorithmSpec::Ucb => Box::new(Ucb::new(&env.sigma)?),
            AlgorithmSpec::Uniform => Box::new(Uniform::new(env.k())),
            AlgorithmSpec::Oracle => Box::new(Oracle::new(&env.theta)),
        })
    }
}
