//! Parallel transport `dT/ds = [Pdot(s), P(s)] T(s)` on `ran P(s)`.

use num_complex::Complex;

use super::ExpansionError;
use crate::linalg::{CMatrix, LinalgError, OperatorFamily};
use crate::scalar::{fromf, Scalar};

/// Pointwise projection tolerance for the `P^2 = P` precondition.
const PROJECTION_TOL: f64 = 1e-8;

/// Grid-sampled parallel transport together with the projection data that
/// generated it.
#[derive(Debug, Clone)]
pub struct TransportTrajectory<T: Scalar> {
    dt: T,
    transport: Vec<CMatrix<T>>,
    transport_inv: Vec<CMatrix<T>>,
    projections: Vec<CMatrix<T>>,
    proj_derivs: Vec<CMatrix<T>>,
}

impl<T: Scalar> TransportTrajectory<T> {
    pub fn steps(&self) -> usize {
        self.transport.len() - 1
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// `T(s_i, 0)`.
    pub fn transport(&self, i: usize) -> &CMatrix<T> {
        &self.transport[i]
    }

    /// `T(s_i, 0)^{-1}`.
    pub fn transport_inv(&self, i: usize) -> &CMatrix<T> {
        &self.transport_inv[i]
    }

    /// `P(s_i)`.
    pub fn projection(&self, i: usize) -> &CMatrix<T> {
        &self.projections[i]
    }

    /// `Pdot(s_i)`.
    pub fn proj_deriv(&self, i: usize) -> &CMatrix<T> {
        &self.proj_derivs[i]
    }

    /// `T(s_i, s_j) = T(s_i, 0) T(s_j, 0)^{-1}` by the group property.
    pub fn between(&self, i: usize, j: usize) -> CMatrix<T> {
        self.transport[i].mul_mat(&self.transport_inv[j])
    }

    /// Maximum intertwining defect `|T_i P(0) - P(s_i) T_i|` over the grid.
    pub fn intertwining_defect(&self) -> T {
        let p0 = &self.projections[0];
        let mut worst = T::zero();
        for (t, p) in self.transport.iter().zip(&self.projections) {
            let defect = (&t.mul_mat(p0) - &p.mul_mat(t)).frobenius_norm();
            worst = worst.max(defect);
        }
        worst
    }
}

/// Parallel transport generated by a projection-valued family, sampled on a
/// uniform grid of `m` steps.
///
/// Fourth-order (classical Runge-Kutta) integration of
/// `dT/ds = [Pdot, P] T`; the inverse transport is obtained pointwise by a
/// direct solve, which is well conditioned because `T` stays unitary-like
/// for Hermitian projections and near-identity in general.
pub fn parallel_transport<T: Scalar>(
    p_family: &OperatorFamily<T>,
    m: usize,
) -> Result<TransportTrajectory<T>, ExpansionError> {
    parallel_transport_of(
        m,
        |s| Ok(p_family.eval(s)),
        |s| Ok(p_family.deriv(s)),
        p_family.dim(),
    )
}

/// Transport driven by fallible projection closures; used when `P(s)` is
/// itself computed (kernel projections of `L1(s)`).
pub fn parallel_transport_of<T: Scalar>(
    m: usize,
    proj: impl Fn(T) -> Result<CMatrix<T>, LinalgError>,
    proj_deriv: impl Fn(T) -> Result<CMatrix<T>, LinalgError>,
    dim: usize,
) -> Result<TransportTrajectory<T>, ExpansionError> {
    assert!(m >= 2, "transport grid needs at least two steps");
    let dt = T::one() / fromf::<T>(m as f64);
    let half = fromf::<T>(0.5);

    let commutator = |s: T| -> Result<CMatrix<T>, ExpansionError> {
        let p = proj(s)?;
        let defect = (&p.mul_mat(&p) - &p).frobenius_norm();
        if defect > fromf::<T>(PROJECTION_TOL) * p.frobenius_norm().max(T::one()) {
            return Err(ExpansionError::NotAProjection {
                s: s.to_f64().unwrap_or(f64::NAN),
                defect: defect.to_f64().unwrap_or(f64::NAN),
            });
        }
        let dp = proj_deriv(s)?;
        Ok(&dp.mul_mat(&p) - &p.mul_mat(&dp))
    };

    let mut transport = Vec::with_capacity(m + 1);
    let mut transport_inv = Vec::with_capacity(m + 1);
    let mut projections = Vec::with_capacity(m + 1);
    let mut proj_derivs = Vec::with_capacity(m + 1);

    let mut t_run = CMatrix::<T>::identity(dim);
    transport.push(t_run.clone());
    transport_inv.push(CMatrix::identity(dim));
    projections.push(proj(T::zero())?);
    proj_derivs.push(proj_deriv(T::zero())?);

    // A(s) at the right edge of the previous step is reused as the left
    // edge of the next one.
    let mut a_left = commutator(T::zero())?;
    for i in 0..m {
        let s = fromf::<T>(i as f64) * dt;
        let s_mid = s + dt * half;
        let s_right = s + dt;
        let a_mid = commutator(s_mid)?;
        let a_right = commutator(s_right)?;

        let k1 = a_left.mul_mat(&t_run);
        let k2 = a_mid.mul_mat(&t_run.axpy(Complex::new(dt * half, T::zero()), &k1));
        let k3 = a_mid.mul_mat(&t_run.axpy(Complex::new(dt * half, T::zero()), &k2));
        let k4 = a_right.mul_mat(&t_run.axpy(Complex::new(dt, T::zero()), &k3));

        let sixth = dt / fromf::<T>(6.0);
        let third = dt / fromf::<T>(3.0);
        t_run = t_run
            .axpy(Complex::new(sixth, T::zero()), &k1)
            .axpy(Complex::new(third, T::zero()), &k2)
            .axpy(Complex::new(third, T::zero()), &k3)
            .axpy(Complex::new(sixth, T::zero()), &k4);

        transport.push(t_run.clone());
        transport_inv.push(t_run.inverse()?);
        projections.push(proj(s_right)?);
        proj_derivs.push(proj_deriv(s_right)?);
        a_left = a_right;
    }

    Ok(TransportTrajectory {
        dt,
        transport,
        transport_inv,
        projections,
        proj_derivs,
    })
}
