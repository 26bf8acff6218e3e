//! JSON configuration files for the command-line tools.
//!
//! One schema serves every subcommand: the environment fields (`D`, `theta`,
//! `sigma`) plus the optional simulation fields. Each subcommand asks for the
//! parts it needs and reports the first missing or invalid field by name.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::AlgorithmSpec;
use crate::bounds::{adversarial_instance, RegimeChoice};
use crate::error::{AlgorithmError, BoundError, ModelError};
use crate::graph::FeedbackGraph;
use crate::model::{Environment, VarianceMatrix};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{0}: missing field")]
    Missing(&'static str),
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("algorithm: {0}")]
    Algorithm(#[from] AlgorithmError),
    #[error("adversarial: {0}")]
    Bound(#[from] BoundError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeName {
    Auto,
    Strong,
    Weak,
}

impl From<RegimeName> for RegimeChoice {
    fn from(r: RegimeName) -> Self {
        match r {
            RegimeName::Auto => RegimeChoice::Auto,
            RegimeName::Strong => RegimeChoice::Strong,
            RegimeName::Weak => RegimeChoice::Weak,
        }
    }
}

/// Replaces `theta` with the worst-case construction at each horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarialSpec {
    pub regime: RegimeName,
    pub alpha: f64,
}

/// The file as written; every field beyond `D` and `sigma` is optional here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "D")]
    pub d_cap: f64,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    pub sigma: VarianceMatrix,
    #[serde(default)]
    pub algorithm: Option<AlgorithmSpec>,
    #[serde(default)]
    pub horizon: Option<u64>,
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default)]
    pub env_id: Option<String>,
    #[serde(default)]
    pub adversarial: Option<AdversarialSpec>,
}

/// A fully validated simulation request.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub env: Environment,
    pub env_id: String,
    pub algorithm: AlgorithmSpec,
    pub horizon: u64,
    pub replications: usize,
    pub seed: u64,
    /// Strictly increasing, ending at `horizon`.
    pub checkpoints: Vec<u64>,
    pub adversarial: Option<AdversarialSpec>,
    /// Variance structure used to rebuild adversarial means per horizon.
    pub sigma: VarianceMatrix,
}

/// `{ceil(T / 2^k) : k >= 0}`, ascending.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut points = Vec::new();
    let mut k = 0u32;
    loop {
        let p = horizon.div_ceil(1u64 << k);
        points.push(p);
        if p <= 1 || k >= 62 {
            break;
        }
        k += 1;
    }
    points.sort_unstable();
    points.dedup();
    points
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Variance matrix after shape and observability checks.
    pub fn variance(&self) -> Result<VarianceMatrix, ConfigError> {
        if let Some(e) = self.sigma.issues().into_iter().next() {
            return Err(e.into());
        }
        if !(self.d_cap.is_finite() && self.d_cap > 0.0) {
            return Err(ModelError::InvalidCap(self.d_cap).into());
        }
        Ok(self.sigma.clone())
    }

    pub fn graph(&self) -> Result<FeedbackGraph, ConfigError> {
        let sigma = self.variance()?;
        FeedbackGraph::from_sigma(&sigma).map_err(|e| ConfigError::Invalid {
            field: "sigma",
            reason: e.to_string(),
        })
    }

    /// The environment given by `theta`, which must be present.
    pub fn environment(&self) -> Result<Environment, ConfigError> {
        let theta = self.theta.clone().ok_or(ConfigError::Missing("theta"))?;
        Ok(Environment::new(theta, self.d_cap, self.variance()?)?)
    }

    fn uniform_sigma(&self) -> Result<f64, ConfigError> {
        self.sigma.uniform_sigma().ok_or(ConfigError::Invalid {
            field: "sigma",
            reason: "adversarial instances need uniform finite variances".into(),
        })
    }

    /// Environment at `horizon`: the adversarial construction when requested,
    /// otherwise the literal `theta`.
    pub fn environment_at(&self, horizon: u64) -> Result<Environment, ConfigError> {
        match self.adversarial {
            None => self.environment(),
            Some(spec) => {
                let graph = self.graph()?;
                let inst =
                    adversarial_instance(&graph, self.d_cap, self.uniform_sigma()?, horizon, spec.alpha, spec.regime.into())?;
                Ok(inst.env)
            }
        }
    }

    pub fn simulation(&self) -> Result<SimConfig, ConfigError> {
        let horizon = self.horizon.ok_or(ConfigError::Missing("horizon"))?;
        self.simulation_at(horizon, self.checkpoints.clone())
    }

    /// Simulation request at an explicit horizon; `checkpoints = None` uses
    /// the default geometric grid.
    pub fn simulation_at(&self, horizon: u64, checkpoints: Option<Vec<u64>>) -> Result<SimConfig, ConfigError> {
        let algorithm = self.algorithm.clone().ok_or(ConfigError::Missing("algorithm"))?;
        let env = self.environment_at(horizon)?;
        let k = env.k() as u64;
        if horizon < k {
            return Err(ConfigError::Invalid {
                field: "horizon",
                reason: format!("must be at least the number of actions ({k}), got {horizon}"),
            });
        }
        let replications = self.replications.unwrap_or(1);
        if replications == 0 {
            return Err(ConfigError::Invalid {
                field: "replications",
                reason: "must be at least 1".into(),
            });
        }
        let checkpoints = match checkpoints {
            None => default_checkpoints(horizon),
            Some(points) => {
                if points.is_empty() {
                    return Err(ConfigError::Invalid {
                        field: "checkpoints",
                        reason: "must not be empty".into(),
                    });
                }
                if points.windows(2).any(|w| w[0] >= w[1]) || points[0] == 0 {
                    return Err(ConfigError::Invalid {
                        field: "checkpoints",
                        reason: "must be strictly increasing positive integers".into(),
                    });
                }
                if *points.last().expect("nonempty") != horizon {
                    return Err(ConfigError::Invalid {
                        field: "checkpoints",
                        reason: format!("last checkpoint must equal the horizon {horizon}"),
                    });
                }
                points
            }
        };
        algorithm.check(&env)?;
        Ok(SimConfig {
            env,
            env_id: self.env_id.clone().unwrap_or_else(|| "env".to_string()),
            algorithm,
            horizon,
            replications,
            seed: self.seed.unwrap_or(0),
            checkpoints,
            adversarial: self.adversarial,
            sigma: self.sigma.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BANDIT: &str = r#"{"D": 1.0, "theta": [0.7, 0.4], "sigma": [[1.0, "inf"], ["inf", 1.0]],
        "algorithm": {"name": "uniform"}, "horizon": 100, "replications": 2, "seed": 7}"#;

    #[test]
    fn default_grid() {
        assert_eq!(default_checkpoints(10), vec![1, 2, 3, 5, 10]);
        assert_eq!(default_checkpoints(1), vec![1]);
        assert_eq!(*default_checkpoints(1000).last().unwrap(), 1000);
    }

    #[test]
    fn parses_full_simulation() {
        let sim = ConfigFile::from_json(BANDIT).unwrap().simulation().unwrap();
        assert_eq!(sim.horizon, 100);
        assert_eq!(sim.replications, 2);
        assert_eq!(sim.seed, 7);
        assert_eq!(sim.algorithm, AlgorithmSpec::Uniform);
        assert_eq!(*sim.checkpoints.last().unwrap(), 100);
    }

    #[test]
    fn theta_length_is_named() {
        let text = BANDIT.replace("[0.7, 0.4]", "[0.7, 0.4, 0.1]");
        let err = ConfigFile::from_json(&text).unwrap().simulation().unwrap_err();
        assert!(err.to_string().starts_with("theta: expected 2 entries"), "{err}");
    }

    #[test]
    fn missing_and_unknown_fields() {
        let err = ConfigFile::from_json(&BANDIT.replace(r#""horizon": 100,"#, "")).unwrap().simulation().unwrap_err();
        assert_eq!(err.to_string(), "horizon: missing field");
        let err = ConfigFile::from_json(&BANDIT.replace("\"seed\"", "\"sede\"")).unwrap_err();
        assert!(err.to_string().contains("sede"));
    }

    #[test]
    fn bad_checkpoints() {
        let text = BANDIT.replace(r#""seed": 7"#, r#""seed": 7, "checkpoints": [10, 5, 100]"#);
        let err = ConfigFile::from_json(&text).unwrap().simulation().unwrap_err();
        assert!(err.to_string().starts_with("checkpoints:"));
        let text = BANDIT.replace(r#""seed": 7"#, r#""seed": 7, "checkpoints": [10, 50]"#);
        assert!(ConfigFile::from_json(&text).unwrap().simulation().is_err());
    }

    #[test]
    fn incompatible_algorithm() {
        let text = BANDIT.replace(r#"{"name": "uniform"}"#, r#"{"name": "greedy"}"#);
        let err = ConfigFile::from_json(&text).unwrap().simulation().unwrap_err();
        assert!(err.to_string().starts_with("algorithm: sigma:"), "{err}");
    }

    #[test]
    fn adversarial_theta_depends_on_horizon() {
        let text = r#"{"D": 1.0, "sigma": [[1.0, "inf", "inf"], ["inf", 1.0, "inf"], ["inf", "inf", 1.0]],
            "algorithm": {"name": "uniform"}, "adversarial": {"regime": "strong", "alpha": 0.07}}"#;
        let cfg = ConfigFile::from_json(text).unwrap();
        let a = cfg.simulation_at(10_000, None).unwrap();
        let b = cfg.simulation_at(100_000, None).unwrap();
        assert_eq!(a.env.theta[0], 0.5);
        assert!(a.env.theta[1] < b.env.theta[1]);
    }
}
