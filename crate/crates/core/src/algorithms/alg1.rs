//! Asymptotically optimal play guided by the allocation program, with a
//! sublinear forced-exploration schedule.

use crate::bounds::asymptotic_allocation;
use crate::error::{AlgorithmError, BoundError};
use crate::graph::FeedbackGraph;
use crate::model::{gaps, ObservationSample};

use super::{Estimates, Policy};

/// `beta(n) = a n^b` with `a ∈ (0, 1/2]` and `b ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationSchedule {
    a: f64,
    b: f64,
}

impl ExplorationSchedule {
    pub fn new(a: f64, b: f64) -> Result<Self, AlgorithmError> {
        if !(a > 0.0 && a <= 0.5) {
            return Err(AlgorithmError::Parameter {
                name: "a",
                reason: format!("must lie in (0, 1/2], got {a}"),
            });
        }
        if !(b > 0.0 && b < 1.0) {
            return Err(AlgorithmError::Parameter {
                name: "b",
                reason: format!("must lie in (0, 1), got {b}"),
            });
        }
        Ok(Self { a, b })
    }

    pub fn value(&self, n: u64) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.a * (n as f64).powf(self.b)
        }
    }
}

/// Whether `counts_scaled` satisfies every covering constraint of the
/// asymptotic program at `theta_hat`. A zero gap makes the test fail.
pub fn in_c_theta(counts_scaled: &[f64], theta_hat: &[f64], sigma: f64, graph: &FeedbackGraph) -> bool {
    let g = gaps(theta_hat);
    let two_var = 2.0 * sigma * sigma;
    (0..graph.k()).all(|j| {
        let gap = if j == g.best { g.second_gap } else { g.gaps[j] };
        if gap <= 0.0 {
            return false;
        }
        let need = two_var / (gap * gap);
        let have: f64 = graph.observers(j).iter().map(|i| counts_scaled[i]).sum();
        have >= need - 1e-9 * need.max(1.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alg1Branch {
    /// Initial sweep observing each action once.
    Init,
    Exploit,
    /// Forced exploration of the least observed action.
    Forced,
    /// Exploration towards the allocation program's solution.
    Allocation,
}

/// Algorithm state. Counts follow the convention that round `t` sees the
/// statistics of rounds `1..t-1`.
#[derive(Debug, Clone)]
pub struct Alg1 {
    graph: FeedbackGraph,
    sigma: f64,
    alpha: f64,
    schedule: ExplorationSchedule,
    estimates: Estimates,
    n_play: Vec<u64>,
    n_explore: u64,
    /// Index of the upcoming round, starting at 1.
    t: u64,
    last_branch: Option<Alg1Branch>,
}

impl Alg1 {
    pub fn new(graph: FeedbackGraph, sigma: f64, alpha: f64, schedule: ExplorationSchedule) -> Result<Self, AlgorithmError> {
        if !(alpha > 2.0 && alpha.is_finite()) {
            return Err(AlgorithmError::Parameter {
                name: "alpha",
                reason: format!("must exceed 2, got {alpha}"),
            });
        }
        let k = graph.k();
        Ok(Self {
            graph,
            sigma,
            alpha,
            schedule,
            estimates: Estimates::new(k),
            n_play: vec![0; k],
            n_explore: 0,
            t: 1,
            last_branch: None,
        })
    }

    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn n_obs(&self) -> &[u64] {
        &self.estimates.n_obs
    }

    pub fn n_play(&self) -> &[u64] {
        &self.n_play
    }

    pub fn n_explore(&self) -> u64 {
        self.n_explore
    }

    pub fn theta_hat(&self) -> Vec<f64> {
        self.estimates.means()
    }

    pub fn last_branch(&self) -> Option<Alg1Branch> {
        self.last_branch
    }

    /// Overrides the internal statistics; used to probe individual decisions.
    pub fn set_statistics(&mut self, t: u64, n_play: Vec<u64>, n_obs: Vec<u64>, theta_hat: &[f64], n_explore: u64) {
        self.t = t;
        self.estimates.sums = theta_hat.iter().zip(&n_obs).map(|(m, &n)| m * n as f64).collect();
        self.estimates.n_obs = n_obs;
        self.n_play = n_play;
        self.n_explore = n_explore;
    }

    fn lowest_observer_of(&self, j: usize) -> usize {
        self.graph.observers(j).first().expect("every action is observable")
    }

    /// Lowest-index action observing the least observed action.
    fn forced_action(&self) -> usize {
        let n = &self.estimates.n_obs;
        let target = (0..n.len()).min_by_key(|&i| (n[i], i)).expect("k >= 2");
        self.lowest_observer_of(target)
    }

    /// Decides the action for the current round without changing state.
    pub fn decide(&self) -> Result<(usize, Alg1Branch), AlgorithmError> {
        let k = self.graph.k() as u64;
        if self.t <= k {
            return Ok((self.lowest_observer_of((self.t - 1) as usize), Alg1Branch::Init));
        }
        let theta_hat = self.theta_hat();
        let scale = 4.0 * self.alpha * (self.t as f64).ln();
        let scaled: Vec<f64> = self.n_play.iter().map(|&n| n as f64 / scale).collect();
        if in_c_theta(&scaled, &theta_hat, self.sigma, &self.graph) {
            return Ok((gaps(&theta_hat).best, Alg1Branch::Exploit));
        }
        let min_obs = *self.estimates.n_obs.iter().min().expect("k >= 2") as f64;
        if min_obs < self.schedule.value(self.n_explore) / k as f64 {
            return Ok((self.forced_action(), Alg1Branch::Forced));
        }
        let report = match asymptotic_allocation(&self.graph, &theta_hat, self.sigma) {
            Ok(r) => r,
            // Tied estimates leave the program without a finite solution.
            Err(BoundError::TiedOptimum) => return Ok((self.forced_action(), Alg1Branch::Forced)),
            Err(e) => return Err(e.into()),
        };
        let action = (0..self.graph.k()).find(|&i| (self.n_play[i] as f64) < report.allocation[i] * scale);
        match action {
            Some(i) => Ok((i, Alg1Branch::Allocation)),
            None => Err(AlgorithmError::InternalInvariant(format!(
                "no action below its target allocation at t = {} (N = {:?}, c = {:?})",
                self.t, self.n_play, report.allocation
            ))),
        }
    }
}

impl Policy for Alg1 {
    fn name(&self) -> &'static str {
        "alg1"
    }

    fn select(&mut self) -> Result<usize, AlgorithmError> {
        let (action, branch) = self.decide()?;
        if matches!(branch, Alg1Branch::Forced | Alg1Branch::Allocation) {
            self.n_explore += 1;
        }
        self.last_branch = Some(branch);
        Ok(action)
    }

    fn update(&mut self, sample: &ObservationSample) {
        self.estimates.record(sample);
        self.n_play[sample.action] += 1;
        self.t += 1;
    }
}
