//! Online learning with Gaussian payoffs and side observations.
//!
//! The crate covers three things:
//!
//! * analysis of an observation structure (feedback graph, observability,
//!   independence and weak domination numbers, maximin exploration allocations);
//! * lower bounds: the finite-time relaxed bound, the asymptotic allocation
//!   program, and the worst-case instances behind the minimax rates;
//! * algorithms and a seeded simulation harness to measure regret growth.

pub mod algorithms;
pub mod bounds;
pub mod config;
pub mod error;
pub mod graph;
pub mod harness;
pub mod lambert;
pub mod lp;
pub mod model;

pub use error::{AlgorithmError, BoundError, GraphError, ModelError};
pub use graph::{ActionSet, FeedbackGraph};
pub use model::{Environment, Sigma, VarianceMatrix};
