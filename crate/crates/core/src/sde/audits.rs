//! Audits of the propagator: semigroup re-association, contraction under
//! Assumption (A), the Duhamel reconstruction, and the backward-to-forward
//! conversion of propagator-weighted stochastic integrals.

use num_complex::Complex;
use num_traits::One;

use super::engine::{
    deterministic_step_matrix, propagate_backward, propagate_inverse, step_matrix,
    PropagatorTrajectory, Scheme, SchemeConfig, TrajectoryDirection,
};
use super::SdeError;
use crate::linalg::{spectral_decompose_default, CMatrix, CVector, OperatorFamily};
use crate::scalar::{fromf, Scalar};
use crate::stochastic::{BrownianPath, GridProcess};

/// Maximum re-association error of the semigroup identity
/// `U(s_i, 0) = U(s_i, s') U(s', 0)` over `i >= split`.
///
/// `U(s_i, s')` is re-stepped from `s'` on the identical increments; for
/// one-step multiplicative schemes the identity is exact up to roundoff.
pub fn semigroup_audit<T: Scalar>(
    traj: &PropagatorTrajectory<T>,
    split_index: usize,
    l1: &OperatorFamily<T>,
    l2: &OperatorFamily<T>,
    path: &BrownianPath<T>,
) -> Result<T, SdeError> {
    if traj.direction() != TrajectoryDirection::Forward {
        return Err(SdeError::Mismatch("semigroup audit needs a forward trajectory".into()));
    }
    if traj.len() != path.steps() + 1 {
        return Err(SdeError::Mismatch(format!(
            "trajectory has {} entries, path has {} steps",
            traj.len(),
            path.steps()
        )));
    }
    let m = path.steps();
    assert!(split_index <= m);
    let dt = path.dt();
    let half = fromf::<T>(0.5);
    let eps = traj.eps();
    let u_split = traj.matrix(split_index).clone();
    let mut seg = CMatrix::identity(l1.dim());
    let mut worst = T::zero();
    for i in split_index..m {
        let s_mid = (fromf::<T>(i as f64) + half) * dt;
        let step = step_matrix(l1, l2, eps, dt, s_mid, path.increment(i), traj.scheme());
        seg = step.mul_mat(&seg);
        let recomposed = seg.mul_mat(&u_split);
        let err = (&recomposed - traj.matrix(i + 1)).frobenius_norm();
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Result of the contraction audit.
#[derive(Debug, Clone)]
pub struct ContractionAudit<T: Scalar> {
    /// `max_i |U(s_i, 0)|` in operator norm.
    pub max_norm: T,
    /// Threshold the norm was held against.
    pub threshold: T,
    pub violated: bool,
}

/// Number of grid samples for the Assumption (A) precondition check.
const ASSUMPTION_SAMPLES: usize = 65;

/// Verifies Assumption (A) for the families and audits the trajectory norm.
///
/// Assumption (A) is checked numerically: the Hermitian part of
/// `L1 - L2^2/2` must be negative semidefinite and `iL2` Hermitian. A
/// failure signals the model, not the stepper. Thresholds: exponential
/// scheme `1 + 1e-9` (each step is a contraction by construction),
/// Euler-Maruyama `1 + tol_growth * dt * M`.
pub fn contraction_audit<T: Scalar>(
    traj: &PropagatorTrajectory<T>,
    l1: &OperatorFamily<T>,
    l2: &OperatorFamily<T>,
    config: &SchemeConfig,
) -> Result<ContractionAudit<T>, SdeError> {
    check_assumption_a(l1, l2)?;
    let mut max_norm = T::zero();
    for u in traj.matrices() {
        max_norm = max_norm.max(u.op_norm());
    }
    let m = traj.len() - 1;
    let threshold = match traj.scheme() {
        Scheme::Exponential => T::one() + fromf::<T>(1e-9),
        Scheme::EulerMaruyama => {
            T::one() + fromf::<T>(config.tol_growth) * traj.dt() * fromf::<T>(m as f64)
        }
    };
    Ok(ContractionAudit {
        max_norm,
        threshold,
        violated: max_norm > threshold,
    })
}

/// Numerical check of Assumption (A) on a fixed sample grid.
pub fn check_assumption_a<T: Scalar>(
    l1: &OperatorFamily<T>,
    l2: &OperatorFamily<T>,
) -> Result<(), SdeError> {
    let herm_tol = fromf::<T>(1e-10);
    let dissip_tol = fromf::<T>(1e-8);
    for k in 0..ASSUMPTION_SAMPLES {
        let s = fromf::<T>(k as f64 / (ASSUMPTION_SAMPLES - 1) as f64);
        let a2 = l2.eval(s);
        let il2 = a2.scale(Complex::new(T::zero(), T::one()));
        if !il2.is_hermitian(herm_tol * a2.frobenius_norm().max(T::one())) {
            return Err(SdeError::AssumptionAViolated(format!(
                "iL2 not Hermitian at s = {:.3}",
                s.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let a1 = l1.eval(s);
        let gen = a1.axpy(Complex::new(fromf::<T>(-0.5), T::zero()), &a2.mul_mat(&a2));
        let herm = gen.hermitian_part();
        let (vals, _) = crate::linalg::eigh(&herm)?;
        let top = vals.last().copied().unwrap_or(T::zero());
        if top > dissip_tol {
            return Err(SdeError::AssumptionAViolated(format!(
                "Re(L1 - L2^2/2) has eigenvalue {:.3e} > 0 at s = {:.3}",
                top.to_f64().unwrap_or(f64::NAN),
                s.to_f64().unwrap_or(f64::NAN)
            )));
        }
    }
    Ok(())
}

/// Residual of the Duhamel identity at `(s, s') = (1, 0)`:
/// `U(1,0) = V(1,0) + eps^{-1/2} int U(1,t) L2(t) V(t,0) dB_t`,
/// with the stochastic integral assembled as right-endpoint backward sums.
///
/// The residual is pure time-discretization error, `O(sqrt(dt))` at fixed
/// `eps`.
pub fn duhamel_audit<T: Scalar>(
    l1: &OperatorFamily<T>,
    l2: &OperatorFamily<T>,
    eps: T,
    path: &BrownianPath<T>,
    config: &SchemeConfig,
) -> Result<T, SdeError> {
    let m = path.steps();
    let dt = path.dt();
    let half = fromf::<T>(0.5);
    let dim = l1.dim();

    // Forward stochastic propagator U(1, 0), stepped in place.
    let mut u_full = CMatrix::identity(dim);
    // Deterministic propagator trajectory V(s_i, 0).
    let mut v = Vec::with_capacity(m + 1);
    let mut v_run = CMatrix::identity(dim);
    v.push(v_run.clone());
    for i in 0..m {
        let s_mid = (fromf::<T>(i as f64) + half) * dt;
        u_full = step_matrix(l1, l2, eps, dt, s_mid, path.increment(i), config.scheme)
            .mul_mat(&u_full);
        v_run = deterministic_step_matrix(l1, eps, dt, s_mid, config.scheme).mul_mat(&v_run);
        v.push(v_run.clone());
    }

    // Backward propagators U(1, s_i).
    let back = propagate_backward(l1, l2, eps, m, path, config)?;

    // Right-endpoint backward Ito sums of U(1,t) L2(t) V(t,0).
    let mut integral = CMatrix::zeros(dim);
    for j in 1..=m {
        let s_j = fromf::<T>(j as f64) * dt;
        let term = back
            .matrix(j)
            .mul_mat(&l2.eval(s_j))
            .mul_mat(&v[j])
            .scale_re(path.increment(j - 1));
        integral = integral.axpy(Complex::one(), &term);
    }
    let rhs = v[m].axpy(
        Complex::new(T::one() / eps.sqrt(), T::zero()),
        &integral,
    );
    Ok((&u_full - &rhs).frobenius_norm())
}

/// Result of the backward-to-forward conversion audit.
#[derive(Debug, Clone)]
pub struct ConversionAudit<T: Scalar> {
    /// `int_0^1 U(1,s') f(s') dB` as right-endpoint sums through the
    /// semigroup relation `U(1,s') = U(1,0) U(s',0)^{-1}`.
    pub backward_value: CVector<T>,
    /// `U(1,0) int_0^1 U(s',0)^{-1} ftilde(s') dB` as left-endpoint sums,
    /// `ftilde = [1 + L2 (L1 - L2^2)^{-1} L2] f`.
    pub forward_value: CVector<T>,
    /// `|backward - forward|`; `O(sqrt(eps))` by the conversion remark.
    pub discrepancy: T,
}

/// Relative tolerance for the consistency of the resolvent solve on the
/// range of `L2`.
const RESOLVENT_RESIDUAL_TOL: f64 = 1e-7;

/// Solve `(L1 - L2^2) x = rhs` on the subspace where the pencil is
/// invertible; the inverse only needs to exist on `ran L2`.
fn resolvent_solve<T: Scalar>(
    pencil: &CMatrix<T>,
    rhs: &CVector<T>,
) -> Result<CVector<T>, SdeError> {
    let rhs_norm = rhs.norm();
    if rhs_norm.is_zero() {
        return Ok(CVector::zeros(rhs.len()));
    }
    let sd = spectral_decompose_default(pencil)
        .map_err(|e| SdeError::SingularConversion(e.to_string()))?;
    let vmat = sd.vector_matrix();
    let coords = vmat
        .solve_vec(rhs)
        .map_err(|e| SdeError::SingularConversion(e.to_string()))?;
    let cutoff = pencil.frobenius_norm().max(T::one()) * fromf::<T>(1e-10);
    let mut x_coords = CVector::zeros(rhs.len());
    for k in 0..rhs.len() {
        if sd.eigenvalues[k].norm() > cutoff {
            x_coords[k] = coords[k] / sd.eigenvalues[k];
        }
    }
    let x = vmat.mul_vec(&x_coords);
    let resid = (&pencil.mul_vec(&x) - rhs).norm();
    if resid > fromf::<T>(RESOLVENT_RESIDUAL_TOL) * rhs_norm {
        return Err(SdeError::SingularConversion(format!(
            "rhs not in the invertible subspace: relative residual {:.3e}",
            (resid / rhs_norm).to_f64().unwrap_or(f64::NAN)
        )));
    }
    Ok(x)
}

/// Convert the backward integral `int U(1,s') f(s') dB_{s'}` of a
/// deterministic `f` into its forward representation and report the
/// discrepancy.
pub fn backward_to_forward<T: Scalar>(
    f: &GridProcess<T, CVector<T>>,
    l1: &OperatorFamily<T>,
    l2: &OperatorFamily<T>,
    eps: T,
    path: &BrownianPath<T>,
    config: &SchemeConfig,
) -> Result<ConversionAudit<T>, SdeError> {
    let m = path.steps();
    if f.len() != m + 1 {
        return Err(SdeError::Mismatch(format!(
            "f sampled on {} points, path grid has {}",
            f.len(),
            m + 1
        )));
    }
    let dt = path.dt();
    let inv = propagate_inverse(l1, l2, eps, path, config)?;
    // U(1,0) from the inverse trajectory's forward twin.
    let fwd = super::engine::propagate_forward(l1, l2, eps, path, config)?;
    let u_final = fwd.terminal();

    // Backward side: right-endpoint sums of U(s_j,0)^{-1} f(s_j).
    let dim = l1.dim();
    let mut back_acc = CVector::zeros(dim);
    // Forward side: left-endpoint sums of U^{-1} ftilde.
    let mut fwd_acc = CVector::zeros(dim);
    for j in 0..m {
        let db = path.increment(j);
        let right = inv.matrix(j + 1).mul_vec(f.value(j + 1));
        back_acc = back_acc.axpy(Complex::new(db, T::zero()), &right);

        let s_left = fromf::<T>(j as f64) * dt;
        let a2 = l2.eval(s_left);
        let pencil = {
            let a1 = l1.eval(s_left);
            let a2sq = a2.mul_mat(&a2);
            a1.axpy(-Complex::<T>::one(), &a2sq)
        };
        let l2f = a2.mul_vec(f.value(j));
        let corr = a2.mul_vec(&resolvent_solve(&pencil, &l2f)?);
        let ftilde = f.value(j).axpy(Complex::one(), &corr);
        let left = inv.matrix(j).mul_vec(&ftilde);
        fwd_acc = fwd_acc.axpy(Complex::new(db, T::zero()), &left);
    }
    let backward_value = u_final.mul_vec(&back_acc);
    let forward_value = u_final.mul_vec(&fwd_acc);
    let discrepancy = (&backward_value - &forward_value).norm();
    Ok(ConversionAudit {
        backward_value,
        forward_value,
        discrepancy,
    })
}
