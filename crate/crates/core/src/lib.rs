//! Simulation lab for KL-regularized contextual bandits and learning from
//! preference feedback: Gibbs planning, least-squares and Bradley-Terry
//! estimation, two-stage mixed-policy sampling, exact and Monte-Carlo gap
//! evaluation, coverage coefficients, and lower-bound hard instances.

pub mod algo;
pub mod bandit;
pub mod error;
pub mod estimate;
pub mod eval;
pub mod experiment;
pub mod hardcase;
pub mod seed;

pub use error::{Error, Result};
