//! Parallel transport on `ran P(s)`, the recursive adiabatic expansion
//! coefficients, assembly of the expansion including the stochastic
//! half-integer terms, and remainder-scaling studies.

mod coefficients;
mod evaluate;
mod remainder;
mod transport;

pub use coefficients::{cumulative_simpson, expansion_coefficients, ExpansionCoefficients};
pub use evaluate::{evaluate_expansion, ExpansionEvaluation};
pub use remainder::{remainder_scaling, RemainderGrid, RemainderScaling};
pub use transport::{parallel_transport, parallel_transport_of, TransportTrajectory};

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::sde::SdeError;
use crate::stats::StatsError;

/// Highest supported expansion order; derivative-order requirements outpace
/// finite-difference accuracy beyond this.
pub const MAX_ORDER: u32 = 3;

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("family is not a projection: |P^2 - P| = {defect:.3e} at s = {s:.4}")]
    NotAProjection { s: f64, defect: f64 },
    #[error("initial datum not in ker L1(0): relative kernel defect {defect:.3e}")]
    InitialDataNotInKernel { defect: f64 },
    #[error("expansion order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooHigh(u32),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
