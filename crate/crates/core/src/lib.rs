//! Numerical laboratory for the adiabatic behaviour of the linear stochastic
//! differential equation
//!
//! ```text
//!     eps dX(s) = L1(s) X(s) ds + sqrt(eps) L2(s) X(s) dB_s,    s in (0, 1),
//! ```
//!
//! driven slowly through a family of bounded operators. The crate provides
//!
//! * dense complex linear algebra for small matrices, including the oblique
//!   kernel projection of `L1` and the reduced inverse on `ran L1`
//!   ([`linalg`]),
//! * discrete Brownian paths with reproducible per-path streams, forward and
//!   backward Ito integrals and empirical audits of the Ito isometry and of
//!   prior moment/tail estimates ([`stochastic`]),
//! * time stepping of the two-parameter stochastic propagator together with
//!   semigroup, contraction, Duhamel and backward-to-forward conversion
//!   audits ([`sde`]),
//! * parallel transport and the recursive adiabatic expansion coefficients
//!   with remainder-scaling studies ([`expansion`]),
//! * the driven dephasing Schroedinger model: joint spectral frames,
//!   dynamical-phase gauges and per-path tunneling samples ([`dephasing`]),
//! * ensemble statistics: exponential-law, independence and convergence-rate
//!   audits ([`stats`]).
//!
//! All numerical kernels are generic over the real scalar type through the
//! [`Scalar`] trait; `f64` is the intended production type and the concrete
//! aliases at the crate root ([`Real`], [`C64`], [`Mat64`], ...) pin it.

pub mod dephasing;
pub mod expansion;
pub mod linalg;
pub mod scalar;
pub mod sde;
pub mod stats;
pub mod stochastic;

pub use scalar::Scalar;

use num_complex::Complex;

/// Production real scalar.
pub type Real = f64;
/// Production complex scalar.
pub type C64 = Complex<f64>;
/// Production complex vector.
pub type Vec64 = linalg::CVector<f64>;
/// Production complex matrix.
pub type Mat64 = linalg::CMatrix<f64>;
/// Production operator family.
pub type Family64 = linalg::OperatorFamily<f64>;
/// Production Brownian path.
pub type Path64 = stochastic::BrownianPath<f64>;
