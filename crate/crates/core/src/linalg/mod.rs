//! Dense complex linear algebra for small matrices (dim <= 16): spectral
//! decompositions, the oblique projection on `ker L1` along `ran L1`, and the
//! reduced inverse of `L1` on its range.

mod eig;
mod family;
mod matrix;
mod projection;

pub use eig::{
    eigh, spectral_decompose, spectral_decompose_default, unitary_exp_into, unitary_phase_exp,
    unitary_phase_exp_from, SpectralDecomposition,
};
pub use family::OperatorFamily;
pub use matrix::{CMatrix, CVector};
pub use projection::{kernel_projection, reduced_inverse, KernelSplit};

use thiserror::Error;

/// Maximum matrix dimension the dense kernels are tuned for.
pub const MAX_DIM: usize = 16;

/// Default spectral gap tolerance; the underlying theory gives no
/// quantitative gap, this is an artifact choice.
pub const DEFAULT_GAP_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix dimension {0} exceeds supported maximum {MAX_DIM}")]
    DimensionTooLarge(usize),
    #[error("defective matrix: no full eigenbasis to tolerance (condition estimate {cond:.3e})")]
    DefectiveMatrix { cond: f64 },
    #[error("QR iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("gap condition violated: {0}")]
    GapViolation(String),
    #[error("vector not in ran L1: |P v| / |v| = {overlap:.3e} exceeds {tol:.3e}")]
    NotInRange { overlap: f64, tol: f64 },
    #[error("singular linear system")]
    Singular,
    #[error("non-finite matrix entry")]
    NonFinite,
}
