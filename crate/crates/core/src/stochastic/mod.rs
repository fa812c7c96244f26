//! Discrete Brownian paths, forward and backward Ito integrals, and
//! empirical audits of the Ito isometry and of the prior moment and tail
//! estimates for stochastic integrals.

mod audits;
mod integrate;
mod path;
mod process;

pub use audits::{
    isometry_audit, moment_bound_audit, tail_bound_audit, AuditRow, IsometryAudit,
    MomentBoundAudit, TailBoundRow,
};
pub use integrate::{backward_ito, forward_ito};
pub use path::BrownianPath;
pub use process::{Adaptation, GridProcess, LinearValue};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error("{integral} Ito integral over a {tag}-adapted process")]
    AdaptationMismatch {
        integral: &'static str,
        tag: &'static str,
    },
    #[error("grid mismatch: process holds {values} values, path has {steps} steps")]
    GridMismatch { values: usize, steps: usize },
    #[error("tail audit requires a uniform sup bound on the integrand")]
    MissingSupBound,
}
