//! Environments with Gaussian payoffs and side observations.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::graph::ActionSet;

/// Hard ceiling on the number of actions; action sets are 64-bit masks.
pub const MAX_ACTIONS: usize = 64;

/// Standard deviation of one observation channel, or `Infinite` when playing
/// the row action reveals nothing about the column action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma {
    Finite(f64),
    Infinite,
}

impl Sigma {
    pub fn is_finite(self) -> bool {
        matches!(self, Sigma::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Sigma::Finite(s) => Some(s),
            Sigma::Infinite => None,
        }
    }
}

impl Serialize for Sigma {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Sigma::Finite(v) => serializer.serialize_f64(*v),
            Sigma::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Sigma {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SigmaVisitor;

        impl Visitor<'_> for SigmaVisitor {
            type Value = Sigma;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Sigma, E> {
                Ok(Sigma::Finite(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Sigma, E> {
                Ok(Sigma::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Sigma, E> {
                Ok(Sigma::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Sigma, E> {
                if v == "inf" {
                    Ok(Sigma::Infinite)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        deserializer.deserialize_any(SigmaVisitor)
    }
}

/// The K×K matrix of observation standard deviations `sigma[i][j]`: playing
/// `i` yields a sample of `theta[j]` with that standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarianceMatrix {
    entries: Vec<Vec<Sigma>>,
}

impl VarianceMatrix {
    /// Builds a matrix, checking shape, signs and column observability.
    pub fn new(entries: Vec<Vec<Sigma>>) -> Result<Self, ModelError> {
        let m = Self { entries };
        let issues = m.issues();
        match issues.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(m),
        }
    }

    /// Builds a matrix without validation. Use [`VarianceMatrix::issues`] to inspect it.
    pub fn new_unchecked(entries: Vec<Vec<Sigma>>) -> Self {
        Self { entries }
    }

    /// Uniform-variance graph feedback: `sigma` on every `j ∈ obs_sets[i]`, infinite elsewhere.
    pub fn from_observation_sets(obs_sets: &[ActionSet], sigma: f64) -> Result<Self, ModelError> {
        let k = obs_sets.len();
        let entries = obs_sets
            .iter()
            .map(|s| {
                (0..k)
                    .map(|j| if s.contains(j) { Sigma::Finite(sigma) } else { Sigma::Infinite })
                    .collect()
            })
            .collect();
        Self::new(entries)
    }

    pub fn bandit(k: usize, sigma: f64) -> Result<Self, ModelError> {
        let sets: Vec<ActionSet> = (0..k).map(ActionSet::singleton).collect();
        Self::from_observation_sets(&sets, sigma)
    }

    pub fn full_information(k: usize, sigma: f64) -> Result<Self, ModelError> {
        let sets = vec![ActionSet::full(k); k];
        Self::from_observation_sets(&sets, sigma)
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Sigma {
        self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<Sigma>] {
        &self.entries
    }

    /// Every structural problem with the matrix, in row-major order.
    pub fn issues(&self) -> Vec<ModelError> {
        let k = self.entries.len();
        let mut out = Vec::new();
        if k < 2 {
            out.push(ModelError::TooFewActions(k));
            return out;
        }
        if k > MAX_ACTIONS {
            out.push(ModelError::TooManyActions(k));
            return out;
        }
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != k {
                out.push(ModelError::NotSquare {
                    row: i,
                    len: row.len(),
                    k,
                });
            }
        }
        if !out.is_empty() {
            return out;
        }
        for (i, row) in self.entries.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                if let Sigma::Finite(v) = s {
                    if !(v.is_finite() && *v >= 0.0) {
                        out.push(ModelError::NegativeSigma { row: i, col: j, value: *v });
                    }
                }
            }
        }
        for j in 0..k {
            if self.entries.iter().all(|row| !row[j].is_finite()) {
                out.push(ModelError::UnobservableAction(j));
            }
        }
        out
    }

    /// True when every entry is finite.
    pub fn is_generalized_full_information(&self) -> bool {
        self.entries.iter().flatten().all(|s| s.is_finite())
    }

    /// The common finite value when all finite entries are equal.
    pub fn uniform_sigma(&self) -> Option<f64> {
        let mut finite = self.entries.iter().flatten().filter_map(|s| s.finite());
        let first = finite.next()?;
        finite.all(|v| v == first).then_some(first)
    }

    /// Largest finite entry.
    pub fn max_finite(&self) -> Option<f64> {
        self.entries
            .iter()
            .flatten()
            .filter_map(|s| s.finite())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// A stochastic environment: mean payoffs in `[0, D]` plus the observation structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    #[serde(rename = "D")]
    pub d_cap: f64,
    pub theta: Vec<f64>,
    pub sigma: VarianceMatrix,
}

/// Outcome of [`Environment::validate`]: empty when every assumption holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<ModelError>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<(), ModelError> {
        match self.violations.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

impl Environment {
    /// Builds an environment and rejects it if any modelling assumption fails.
    pub fn new(theta: Vec<f64>, d_cap: f64, sigma: VarianceMatrix) -> Result<Self, ModelError> {
        let env = Self { d_cap, theta, sigma };
        env.validate().into_result()?;
        Ok(env)
    }

    pub fn k(&self) -> usize {
        self.theta.len()
    }

    /// Checks the box constraint, dimensions and the observability of every action.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if !(self.d_cap.is_finite() && self.d_cap > 0.0) {
            violations.push(ModelError::InvalidCap(self.d_cap));
        }
        if self.theta.len() != self.sigma.k() {
            violations.push(ModelError::ThetaLength {
                expected: self.sigma.k(),
                found: self.theta.len(),
            });
        }
        for (i, &t) in self.theta.iter().enumerate() {
            if !(t.is_finite() && t >= 0.0 && t <= self.d_cap) {
                violations.push(ModelError::ThetaOutOfBox {
                    action: i,
                    value: t,
                    d_cap: self.d_cap,
                });
            }
        }
        violations.extend(self.sigma.issues());
        ValidationReport { violations }
    }

    pub fn gaps(&self) -> GapVector {
        gaps(&self.theta)
    }

    /// Draws the observation vector revealed by playing `action`.
    pub fn sample_observation<R: Rng + ?Sized>(&self, action: usize, rng: &mut R) -> ObservationSample {
        let values = self.sigma.rows()[action]
            .iter()
            .zip(&self.theta)
            .map(|(s, &mean)| match s {
                Sigma::Finite(sd) => {
                    let z: f64 = rng.sample(StandardNormal);
                    Some(mean + sd * z)
                }
                Sigma::Infinite => None,
            })
            .collect();
        ObservationSample { action, values }
    }
}

/// Suboptimality gaps of a mean vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapVector {
    pub gaps: Vec<f64>,
    /// Lowest-index maximizer of theta.
    pub best: usize,
    /// Index of the second best action (lowest index among ties).
    pub second: usize,
    /// Gap of the second best action.
    pub second_gap: f64,
}

impl GapVector {
    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }

    /// Pseudo-regret paid for one play of `action`.
    pub fn regret_of(&self, action: usize) -> f64 {
        self.gaps[action]
    }
}

/// Computes `d_i = max theta - theta_i`, breaking ties towards the lowest index.
///
/// Panics if `theta` has fewer than two entries.
pub fn gaps(theta: &[f64]) -> GapVector {
    assert!(theta.len() >= 2, "gaps need at least two actions");
    let mut best = 0;
    for (i, &t) in theta.iter().enumerate() {
        if t > theta[best] {
            best = i;
        }
    }
    let top = theta[best];
    let gaps: Vec<f64> = theta.iter().map(|&t| top - t).collect();
    let second = (0..theta.len())
        .filter(|&i| i != best)
        .min_by(|&a, &b| gaps[a].total_cmp(&gaps[b]).then(a.cmp(&b)))
        .expect("at least two actions");
    GapVector {
        second_gap: gaps[second],
        gaps,
        best,
        second,
    }
}

pub fn pseudo_regret_increment(gaps: &GapVector, action: usize) -> f64 {
    gaps.regret_of(action)
}

/// One observation vector; `values[j]` is `None` when `j` is not observed.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSample {
    pub action: usize,
    pub values: Vec<Option<f64>>,
}

impl ObservationSample {
    pub fn observed(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().filter_map(|(j, v)| v.map(|x| (j, x)))
    }

    pub fn observed_set(&self) -> ActionSet {
        self.observed().map(|(j, _)| j).collect()
    }
}
