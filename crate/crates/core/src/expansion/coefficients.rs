//! The recursive expansion coefficients
//!
//! ```text
//!   b_0 = 0
//!   a_n(s) = T(s,0) a_n(0) + int_0^s T(s,s') Pdot(s') b_n(s') ds'
//!   b_{n+1}(s) = L1(s)^{-1} ( Pdot(s) a_n(s) + Pperp(s) bdot_n(s) )
//! ```
//!
//! with `a_n(s)` a kernel section and `b_n(s)` a range section of `L1(s)`.

use num_complex::Complex;
use num_traits::One;

use super::transport::{parallel_transport_of, TransportTrajectory};
use super::{ExpansionError, MAX_ORDER};
use crate::linalg::{CVector, KernelSplit, OperatorFamily};
use crate::scalar::{fromf, Scalar};

/// Relative kernel tolerance for initial data.
const INITIAL_KERNEL_TOL: f64 = 1e-8;

/// Finite-difference step for the derivative of the computed kernel
/// projection family.
const PROJECTION_FD_STEP: f64 = 1e-5;

/// Grid-sampled expansion coefficients up to order `N`, plus `b_{N+1}` for
/// the remainder structure.
#[derive(Debug, Clone)]
pub struct ExpansionCoefficients<T: Scalar> {
    order: u32,
    dt: T,
    /// `a[n][i]`, `n = 0..=N`.
    a: Vec<Vec<CVector<T>>>,
    /// `b[n][i]`, `n = 0..=N`; `b[0]` is identically zero.
    b: Vec<Vec<CVector<T>>>,
    /// `b_{N+1}` on the grid.
    b_next: Vec<CVector<T>>,
    /// Worst `|P a_n - a_n|` over orders and grid points.
    pub max_kernel_defect: T,
    /// Worst `|P b_n|` over orders and grid points.
    pub max_range_defect: T,
}

impl<T: Scalar> ExpansionCoefficients<T> {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn steps(&self) -> usize {
        self.a[0].len() - 1
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn a(&self, n: usize, i: usize) -> &CVector<T> {
        &self.a[n][i]
    }

    pub fn b(&self, n: usize, i: usize) -> &CVector<T> {
        &self.b[n][i]
    }

    pub fn a_grid(&self, n: usize) -> &[CVector<T>] {
        &self.a[n]
    }

    pub fn b_grid(&self, n: usize) -> &[CVector<T>] {
        &self.b[n]
    }

    pub fn b_next_grid(&self) -> &[CVector<T>] {
        &self.b_next
    }

    /// Slow-manifold initial datum `sum_n eps^n (a_n(0) + b_n(0))` truncated
    /// at the stored order.
    pub fn slow_manifold_start(&self, eps: T) -> CVector<T> {
        let mut x0 = self.a[0][0].clone();
        let mut weight = T::one();
        for n in 0..=self.order as usize {
            if n > 0 {
                weight = weight * eps;
                x0 = x0.axpy(Complex::new(weight, T::zero()), &self.a[n][0]);
                x0 = x0.axpy(Complex::new(weight, T::zero()), &self.b[n][0]);
            }
        }
        x0
    }
}

/// Cumulative composite Simpson prefix integrals of grid samples: entry `i`
/// approximates the integral from `0` to `i * dt`. Even entries use
/// composite Simpson; odd entries close the last interval with a
/// cubic-exact third-order Newton-Cotes rule.
pub fn cumulative_simpson<T: Scalar, V: crate::stochastic::LinearValue<T>>(
    values: &[V],
    dt: T,
) -> Vec<V> {
    let n = values.len();
    assert!(n >= 4, "cumulative Simpson needs at least four samples");
    let mut out = Vec::with_capacity(n);
    out.push(values[0].zero_like());
    let w24 = dt / fromf::<T>(24.0);
    let third = dt / fromf::<T>(3.0);
    for i in 1..n {
        if i == 1 {
            // Cubic through the first four samples over the first interval.
            let acc = values[0]
                .scale_re(fromf::<T>(9.0) * w24)
                .add(&values[1].scale_re(fromf::<T>(19.0) * w24))
                .add(&values[2].scale_re(fromf::<T>(-5.0) * w24))
                .add(&values[3].scale_re(w24));
            out.push(acc);
        } else if i % 2 == 0 {
            let acc = out[i - 2]
                .add(&values[i - 2].scale_re(third))
                .add(&values[i - 1].scale_re(fromf::<T>(4.0) * third))
                .add(&values[i].scale_re(third));
            out.push(acc);
        } else {
            // Cubic through the last four samples over the last interval.
            let acc = out[i - 1]
                .add(&values[i - 3].scale_re(w24))
                .add(&values[i - 2].scale_re(fromf::<T>(-5.0) * w24))
                .add(&values[i - 1].scale_re(fromf::<T>(19.0) * w24))
                .add(&values[i].scale_re(fromf::<T>(9.0) * w24));
            out.push(acc);
        }
    }
    out
}

/// Central differences on the grid with second-order one-sided stencils at
/// the endpoints.
fn grid_derivative<T: Scalar>(values: &[CVector<T>], dt: T) -> Vec<CVector<T>> {
    let n = values.len();
    let half_inv = Complex::new(T::one() / (dt + dt), T::zero());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = if i == 0 {
            values[0]
                .scale(Complex::new(fromf::<T>(-3.0), T::zero()))
                .axpy(Complex::new(fromf::<T>(4.0), T::zero()), &values[1])
                .axpy(-Complex::<T>::one(), &values[2])
                .scale(half_inv)
        } else if i == n - 1 {
            values[n - 1]
                .scale(Complex::new(fromf::<T>(3.0), T::zero()))
                .axpy(Complex::new(fromf::<T>(-4.0), T::zero()), &values[n - 2])
                .axpy(Complex::one(), &values[n - 3])
                .scale(half_inv)
        } else {
            (&values[i + 1] - &values[i - 1]).scale(half_inv)
        };
        out.push(d);
    }
    out
}

/// Compute the expansion coefficients for `order <= 3` on a uniform grid of
/// `m` steps, from initial kernel data `initial[n] = a_n(0)`.
pub fn expansion_coefficients<T: Scalar>(
    l1_family: &OperatorFamily<T>,
    initial: &[CVector<T>],
    order: u32,
    m: usize,
    gap_tol: T,
) -> Result<ExpansionCoefficients<T>, ExpansionError> {
    if order > MAX_ORDER {
        return Err(ExpansionError::OrderTooHigh(order));
    }
    assert_eq!(
        initial.len(),
        order as usize + 1,
        "need one initial kernel datum per order"
    );
    let dim = l1_family.dim();
    let dt = T::one() / fromf::<T>(m as f64);

    // Kernel/range splits at every grid point; also validates the gap along
    // the whole grid before any transport evaluation happens off-grid.
    let splits: Vec<KernelSplit<T>> = (0..=m)
        .map(|i| KernelSplit::new(&l1_family.eval(fromf::<T>(i as f64) * dt), gap_tol))
        .collect::<Result<_, _>>()?;

    // Initial data must be kernel sections.
    for a0 in initial {
        let norm = a0.norm();
        if norm.is_zero() {
            continue;
        }
        let defect = (&splits[0].projection().mul_vec(a0) - a0).norm() / norm;
        if defect > fromf::<T>(INITIAL_KERNEL_TOL) {
            return Err(ExpansionError::InitialDataNotInKernel {
                defect: defect.to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    // Parallel transport of the kernel projection family. The derivative of
    // the projection is taken by central differences of the computed
    // projection; the gap was validated on the grid above.
    let h = fromf::<T>(PROJECTION_FD_STEP);
    let proj = |s: T| KernelSplit::new(&l1_family.eval(s), gap_tol).map(|k| k.projection().clone());
    // Second-order stencils throughout: a first-order one-sided difference
    // at the boundary would break the structural identity P Pdot = Pdot Pperp
    // at O(h) and leak kernel components into the recursion.
    let proj_deriv = |s: T| {
        let inv = T::one() / (h + h);
        if s - h < T::zero() {
            let p0 = proj(s)?;
            let p1 = proj(s + h)?;
            let p2 = proj(s + h + h)?;
            Ok(p0
                .scale_re(fromf::<T>(-3.0))
                .axpy(Complex::new(fromf::<T>(4.0), T::zero()), &p1)
                .axpy(-Complex::<T>::one(), &p2)
                .scale_re(inv))
        } else if s + h > T::one() {
            let p0 = proj(s)?;
            let p1 = proj(s - h)?;
            let p2 = proj(s - h - h)?;
            Ok(p0
                .scale_re(fromf::<T>(3.0))
                .axpy(Complex::new(fromf::<T>(-4.0), T::zero()), &p1)
                .axpy(Complex::one(), &p2)
                .scale_re(inv))
        } else {
            let p_hi = proj(s + h)?;
            let p_lo = proj(s - h)?;
            Ok((&p_hi - &p_lo).scale_re(inv))
        }
    };
    let transport: TransportTrajectory<T> = parallel_transport_of(m, proj, proj_deriv, dim)?;

    let mut a: Vec<Vec<CVector<T>>> = Vec::with_capacity(order as usize + 1);
    let mut b: Vec<Vec<CVector<T>>> = Vec::with_capacity(order as usize + 1);
    b.push(vec![CVector::zeros(dim); m + 1]);

    for n in 0..=order as usize {
        // a_n(s_i) = T_i a_n(0) + T_i * cumSimpson(T^{-1} Pdot b_n)(s_i).
        let a_n: Vec<CVector<T>> = if b[n].iter().all(|v| v.norm().is_zero()) {
            (0..=m)
                .map(|i| transport.transport(i).mul_vec(&initial[n]))
                .collect()
        } else {
            let integrand: Vec<CVector<T>> = (0..=m)
                .map(|i| {
                    transport
                        .transport_inv(i)
                        .mul_vec(&transport.proj_deriv(i).mul_vec(&b[n][i]))
                })
                .collect();
            let prefix = cumulative_simpson(&integrand, dt);
            (0..=m)
                .map(|i| {
                    transport
                        .transport(i)
                        .mul_vec(&initial[n].axpy(Complex::one(), &prefix[i]))
                })
                .collect()
        };
        a.push(a_n);

        // b_{n+1}(s_i) = L1(s_i)^{-1} (Pdot a_n + Pperp bdot_n)(s_i).
        let bdot = grid_derivative(&b[n], dt);
        let b_next: Vec<CVector<T>> = (0..=m)
            .map(|i| {
                let mut rhs = transport.proj_deriv(i).mul_vec(&a[n][i]);
                if n > 0 {
                    let perp = &bdot[i] - &splits[i].projection().mul_vec(&bdot[i]);
                    rhs = rhs.axpy(Complex::one(), &perp);
                }
                // Project out the residual kernel component before the
                // range solve; it is numerical noise of the FD stencils.
                let clean = &rhs - &splits[i].projection().mul_vec(&rhs);
                splits[i].solve_on_range(&clean)
            })
            .collect::<Result<_, _>>()?;
        if (n as u32) < order {
            b.push(b_next);
        } else {
            // Validate splitting invariants before returning.
            let mut kernel_defect = T::zero();
            let mut range_defect = T::zero();
            for i in 0..=m {
                let p = splits[i].projection();
                for grid in &a {
                    kernel_defect =
                        kernel_defect.max((&p.mul_vec(&grid[i]) - &grid[i]).norm());
                }
                for grid in &b {
                    range_defect = range_defect.max(p.mul_vec(&grid[i]).norm());
                }
            }
            return Ok(ExpansionCoefficients {
                order,
                dt,
                a,
                b,
                b_next,
                max_kernel_defect: kernel_defect,
                max_range_defect: range_defect,
            });
        }
    }
    unreachable!("loop returns at the final order");
}
