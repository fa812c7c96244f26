//! Time stepping of the two-parameter stochastic propagator and the audits
//! tied to it: semigroup re-association, contraction under Assumption (A),
//! the Duhamel reconstruction, and the backward-to-forward conversion of
//! stochastic integrals.

mod audits;
mod engine;

pub use audits::{
    backward_to_forward, contraction_audit, duhamel_audit, semigroup_audit, ContractionAudit,
    ConversionAudit,
};
pub use engine::{
    deterministic_step_matrix, propagate_backward, propagate_forward, propagate_inverse,
    step_matrix, PathKey, PropagatorTrajectory, Scheme, SchemeConfig, TrajectoryDirection,
};

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::stochastic::StochasticError;

#[derive(Debug, Error)]
pub enum SdeError {
    #[error("grid too coarse: {m} steps < K/eps = {required:.1}")]
    GridTooCoarse { m: usize, required: f64 },
    #[error("Assumption (A) violated by the model: {0}")]
    AssumptionAViolated(String),
    #[error("singular backward-to-forward conversion: {0}")]
    SingularConversion(String),
    #[error("trajectory and audit arguments disagree: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
}
