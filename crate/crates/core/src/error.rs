use thiserror::Error;

use crate::lp::LpError;

/// Violations of the modelling assumptions. Action indices are stored
/// zero-based and printed one-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("sigma: need at least 2 actions, got {0}")]
    TooFewActions(usize),
    #[error("sigma: at most {max} actions supported, got {0}", max = crate::model::MAX_ACTIONS)]
    TooManyActions(usize),
    #[error("sigma: row {} has {len} entries, expected {k}", row + 1)]
    NotSquare { row: usize, len: usize, k: usize },
    #[error("sigma: entry ({}, {}) = {value} is not a nonnegative number", row + 1, col + 1)]
    NegativeSigma { row: usize, col: usize, value: f64 },
    #[error("sigma: column {} unobservable (action {} is never observed)", .0 + 1, .0 + 1)]
    UnobservableAction(usize),
    #[error("theta: expected {expected} entries, found {found}")]
    ThetaLength { expected: usize, found: usize },
    #[error("theta: theta_{} = {value} lies outside [0, D] with D = {d_cap}", action + 1)]
    ThetaOutOfBox { action: usize, value: f64, d_cap: f64 },
    #[error("D: must be a positive finite number, got {0}")]
    InvalidCap(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("exact search supports at most {limit} actions, got {size}")]
    SizeLimit { size: usize, limit: usize },
    #[error("action {} cannot be observed from the given action set", .0 + 1)]
    Unobservable(usize),
    #[error("action set must be nonempty")]
    EmptySet,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("Lambert W argument {0} is below -1/e")]
    LambertDomain(f64),
    #[error("zero observation variance at ({}, {}); lower-bound programs need positive variances", .0 + 1, .1 + 1)]
    ZeroVariance(usize, usize),
    #[error("budget must be positive and the horizon at least 1 (B = {b}, T = {t})")]
    InvalidBudget { b: f64, t: u64 },
    #[error("the optimal action is not unique (second gap is zero)")]
    TiedOptimum,
    #[error("asymptotic bound needs uniform variances (every finite sigma equal)")]
    NonUniformVariance,
    #[error("construction needs some infinite sigma (generalized full information has no minimax instance)")]
    FullInformation,
    #[error("perturbation epsilon = {eps} must be below D/2 = {half}; increase the horizon")]
    HorizonTooSmall { eps: f64, half: f64 },
    #[error("requested regime {requested} but the graph is {actual}")]
    RegimeMismatch {
        requested: &'static str,
        actual: &'static str,
    },
    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgorithmError {
    #[error("{0}")]
    Incompatible(String),
    #[error("invalid parameter {name}: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Bound(#[from] BoundError),
}
