//! The driven dephasing stochastic Schroedinger equation
//!
//! ```text
//!   eps d|psi> = -(iH(s) + Gamma(s)^2/2)|psi> ds - sqrt(eps) i Gamma(s)|psi> dB
//! ```
//!
//! for commuting Hermitian families `H(s)`, `Gamma(s)`: joint spectral
//! frames with a parallel-transport gauge, dynamical phases, the
//! first-order transition coefficients, and per-path tunneling samples.

mod frame;
mod model;
mod tunneling;

pub use frame::{
    build_frame, dynamical_phase, transition_coefficients, SpectralFrame, TransitionCoefficients,
};
pub use model::{gauge_subtract, DephasingModel};
pub use tunneling::{
    forward_tunneling_form, simulate_psi, tunneling_ensemble, tunneling_sample, TunnelingSample,
};

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::sde::SdeError;

#[derive(Debug, Error)]
pub enum DephasingError {
    #[error("H and Gamma do not commute at s = {s:.4}: |[H, Gamma]| = {norm:.3e}")]
    NotCommuting { s: f64, norm: f64 },
    #[error("family not Hermitian at s = {s:.4}: defect {defect:.3e}")]
    NotHermitian { s: f64, defect: f64 },
    #[error("spectrum collision at s = {s:.4}: L1 eigenvalue distance {distance:.3e} < gap_tol")]
    SpectrumCollision { s: f64, distance: f64 },
    #[error("level index {level} out of range for dimension {dim}")]
    LevelOutOfRange { level: usize, dim: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sde(#[from] SdeError),
}
