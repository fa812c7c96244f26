//! Assembly of the expansion on one Brownian realization:
//!
//! ```text
//!   X(s) = sum_n eps^n ( eps^{-1/2} int_0^s U(s,s') L2(s') b_n(s') dB_{s'}
//!                        + a_n(s) + b_n(s) )
//! ```
//!
//! The backward integrals use right-endpoint sums with
//! `U(s, s') = U(s,0) U(s',0)^{-1}`, the inverse either stepped or taken as
//! the adjoint on unitary models.

use num_complex::Complex;
use num_traits::One;

use super::coefficients::ExpansionCoefficients;
use super::ExpansionError;
use crate::linalg::{CVector, OperatorFamily};
use crate::scalar::{fromf, Scalar};
use crate::sde::{propagate_inverse, PropagatorTrajectory, SchemeConfig, TrajectoryDirection};
use crate::stochastic::BrownianPath;

/// Unitarity defect below which the inverse propagator is taken as the
/// adjoint.
const UNITARY_TOL: f64 = 1e-8;

/// Per-order terms and the assembled expansion on a grid.
#[derive(Debug, Clone)]
pub struct ExpansionEvaluation<T: Scalar> {
    eps: T,
    /// `I_n(s_i) = int_0^{s_i} U(s_i, s') L2(s') b_n(s') dB` per order.
    stochastic: Vec<Vec<CVector<T>>>,
    /// `a_n(s_i) + b_n(s_i)` per order.
    deterministic: Vec<Vec<CVector<T>>>,
    /// Full assembly at the stored order.
    assembled: Vec<CVector<T>>,
}

impl<T: Scalar> ExpansionEvaluation<T> {
    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn assembled(&self) -> &[CVector<T>] {
        &self.assembled
    }

    pub fn stochastic_term(&self, n: usize) -> &[CVector<T>] {
        &self.stochastic[n]
    }

    pub fn deterministic_term(&self, n: usize) -> &[CVector<T>] {
        &self.deterministic[n]
    }

    /// Assemble the truncation at order `n <= N`.
    pub fn truncated(&self, order: usize, i: usize) -> CVector<T> {
        let mut acc = self.deterministic[0][i].clone();
        let mut eps_pow = T::one();
        let sqrt_eps = self.eps.sqrt();
        for n in 1..=order {
            eps_pow = eps_pow * self.eps;
            acc = acc.axpy(Complex::new(eps_pow, T::zero()), &self.deterministic[n][i]);
            acc = acc.axpy(
                Complex::new(eps_pow / sqrt_eps, T::zero()),
                &self.stochastic[n][i],
            );
        }
        acc
    }
}

/// Evaluate the expansion along the trajectory `traj` (same path, same
/// `eps`, same grid as the coefficients).
pub fn evaluate_expansion<T: Scalar>(
    coeffs: &ExpansionCoefficients<T>,
    l1: &OperatorFamily<T>,
    l2: &OperatorFamily<T>,
    eps: T,
    path: &BrownianPath<T>,
    traj: &PropagatorTrajectory<T>,
    config: &SchemeConfig,
) -> Result<ExpansionEvaluation<T>, ExpansionError> {
    let m = path.steps();
    if coeffs.steps() != m {
        return Err(ExpansionError::GridMismatch(format!(
            "coefficients on {} steps, path on {}",
            coeffs.steps(),
            m
        )));
    }
    if traj.len() != m + 1 || traj.direction() != TrajectoryDirection::Forward {
        return Err(ExpansionError::GridMismatch(
            "trajectory must be forward on the path grid".into(),
        ));
    }
    if (traj.eps() - eps).abs() > T::epsilon() * fromf::<T>(4.0) {
        return Err(ExpansionError::GridMismatch("trajectory eps differs".into()));
    }

    let dt = path.dt();
    let order = coeffs.order() as usize;
    let dim = l1.dim();

    // Inverse propagators: adjoint on unitary models, stepped otherwise.
    let terminal = traj.terminal();
    let unitary = (&terminal.adjoint().mul_mat(terminal)
        - &crate::linalg::CMatrix::identity(dim))
        .frobenius_norm()
        < fromf::<T>(UNITARY_TOL);
    let inverse_traj = if unitary {
        None
    } else {
        Some(propagate_inverse(l1, l2, eps, path, config)?)
    };
    let inv_at = |i: usize| -> crate::linalg::CMatrix<T> {
        match &inverse_traj {
            Some(t) => t.matrix(i).clone(),
            None => traj.matrix(i).adjoint(),
        }
    };

    let mut stochastic = Vec::with_capacity(order + 1);
    let mut deterministic = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let det: Vec<CVector<T>> = (0..=m)
            .map(|i| coeffs.a(n, i).axpy(Complex::one(), coeffs.b(n, i)))
            .collect();
        deterministic.push(det);

        // Prefix sums q(i) = sum_{j<=i} U(s_j,0)^{-1} L2(s_j) b_n(s_j) dB_j,
        // so that I_n(s_i) = U(s_i,0) q(i).
        let mut sto = Vec::with_capacity(m + 1);
        let mut q = CVector::zeros(dim);
        sto.push(CVector::zeros(dim));
        for i in 1..=m {
            if n > 0 {
                let s_i = fromf::<T>(i as f64) * dt;
                let integrand = inv_at(i).mul_vec(&l2.eval(s_i).mul_vec(coeffs.b(n, i)));
                q = q.axpy(Complex::new(path.increment(i - 1), T::zero()), &integrand);
                sto.push(traj.matrix(i).mul_vec(&q));
            } else {
                sto.push(CVector::zeros(dim));
            }
        }
        stochastic.push(sto);
    }

    let mut assembled = Vec::with_capacity(m + 1);
    let sqrt_eps = eps.sqrt();
    for i in 0..=m {
        let mut acc = deterministic[0][i].clone();
        let mut eps_pow = T::one();
        for n in 1..=order {
            eps_pow = eps_pow * eps;
            acc = acc.axpy(Complex::new(eps_pow, T::zero()), &deterministic[n][i]);
            acc = acc.axpy(
                Complex::new(eps_pow / sqrt_eps, T::zero()),
                &stochastic[n][i],
            );
        }
        assembled.push(acc);
    }

    Ok(ExpansionEvaluation {
        eps,
        stochastic,
        deterministic,
        assembled,
    })
}
