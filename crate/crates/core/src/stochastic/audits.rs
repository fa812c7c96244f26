//! Monte Carlo audits of the two standard Ito relations (zero mean and the
//! isometry) and of the prior moment and tail estimates for stochastic
//! integrals.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::integrate::{backward_ito, forward_ito};
use super::path::BrownianPath;
use super::process::{Adaptation, GridProcess, LinearValue};
use super::StochasticError;
use crate::scalar::{fromf, mean_stderr, pairwise_sum, Scalar};

/// One CSV row of audit output.
#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub audit_name: String,
    pub n_or_gamma: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub satisfied: bool,
}

/// Result of the isometry audit.
#[derive(Debug, Clone)]
pub struct IsometryAudit<T: Scalar> {
    /// `|E[int X dB]|` with an attached standard error.
    pub mean_err: T,
    pub mean_stderr: T,
    /// `E[|int X dB|^2] / int E[|X|^2] ds`; NaN when degenerate.
    pub isometry_ratio: T,
    pub ratio_stderr: T,
    /// Set when the denominator vanishes (identically zero integrand).
    pub degenerate: bool,
    pub n_paths: usize,
}

impl<T: Scalar> IsometryAudit<T> {
    pub fn satisfied(&self) -> bool {
        if self.degenerate {
            return true;
        }
        let three = fromf::<T>(3.0);
        (self.isometry_ratio - T::one()).abs() <= three * self.ratio_stderr
            && self.mean_err <= three * self.mean_stderr
    }

    pub fn to_row(&self, name: &str) -> AuditRow {
        AuditRow {
            audit_name: name.to_string(),
            n_or_gamma: f64::NAN,
            lhs: self.isometry_ratio.to_f64().unwrap_or(f64::NAN),
            rhs: 1.0,
            stderr: self.ratio_stderr.to_f64().unwrap_or(f64::NAN),
            satisfied: self.satisfied(),
        }
    }
}

/// Result of the `2n`-th moment bound audit.
#[derive(Debug, Clone)]
pub struct MomentBoundAudit<T: Scalar> {
    pub order: u32,
    /// Monte Carlo estimate of `E[|int X dB|^{2n}]`.
    pub lhs_estimate: T,
    pub lhs_stderr: T,
    /// `(2n^2 - n)^n  E[int |X|^{2n} ds]`.
    pub rhs_bound: T,
    pub rhs_stderr: T,
    pub satisfied: bool,
}

impl<T: Scalar> MomentBoundAudit<T> {
    pub fn to_row(&self, name: &str) -> AuditRow {
        AuditRow {
            audit_name: name.to_string(),
            n_or_gamma: self.order as f64,
            lhs: self.lhs_estimate.to_f64().unwrap_or(f64::NAN),
            rhs: self.rhs_bound.to_f64().unwrap_or(f64::NAN),
            stderr: self.lhs_stderr.to_f64().unwrap_or(f64::NAN),
            satisfied: self.satisfied,
        }
    }
}

/// One row of the tail bound audit table.
#[derive(Debug, Clone)]
pub struct TailBoundRow<T: Scalar> {
    pub gamma: T,
    /// Empirical exceedance frequency of `|int X dB|^2 > gamma`.
    pub empirical_prob: T,
    pub empirical_stderr: T,
    /// `exp(-gamma / (8 |X|_inf^2) + 1/4)`.
    pub bound: T,
    pub satisfied: bool,
}

impl<T: Scalar> TailBoundRow<T> {
    pub fn to_row(&self, name: &str) -> AuditRow {
        AuditRow {
            audit_name: name.to_string(),
            n_or_gamma: self.gamma.to_f64().unwrap_or(f64::NAN),
            lhs: self.empirical_prob.to_f64().unwrap_or(f64::NAN),
            rhs: self.bound.to_f64().unwrap_or(f64::NAN),
            stderr: self.empirical_stderr.to_f64().unwrap_or(f64::NAN),
            satisfied: self.satisfied,
        }
    }
}

/// Integrate by the convention the adaptation tag selects.
fn integrate_tagged<T: Scalar, V: LinearValue<T>>(
    x: &GridProcess<T, V>,
    path: &BrownianPath<T>,
) -> Result<V, StochasticError> {
    match x.adaptation() {
        Adaptation::Backward => backward_ito(x, path),
        _ => forward_ito(x, path),
    }
}

/// Riemann sum of `|X|^{2n}` over the grid, using the endpoint matching the
/// integration convention.
fn power_quadrature<T: Scalar, V: LinearValue<T>>(x: &GridProcess<T, V>, dt: T, n: u32) -> T {
    let m = x.len() - 1;
    let backward = x.adaptation() == Adaptation::Backward;
    let mut acc = T::zero();
    for i in 0..m {
        let idx = if backward { i + 1 } else { i };
        acc = acc + x.value(idx).norm_sqr().powi(n as i32);
    }
    acc * dt
}

/// Per-path statistics shared by the audits.
fn per_path_stats<T, V, F>(
    sampler: &F,
    m: usize,
    n_paths: usize,
    seed: u64,
    moment_order: u32,
) -> Vec<(V, T, T)>
where
    T: Scalar,
    V: LinearValue<T>,
    F: Fn(&BrownianPath<T>) -> GridProcess<T, V> + Sync,
    StandardNormal: Distribution<T>,
{
    (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let path = BrownianPath::<T>::sample(m, seed, p as u64);
            let x = sampler(&path);
            let integral = integrate_tagged(&x, &path).expect("sampler produced a valid process");
            let quad = power_quadrature(&x, path.dt(), moment_order);
            (integral, T::zero(), quad)
        })
        .collect()
}

/// Empirical audit of `E[int X dB] = 0` and the Ito isometry.
pub fn isometry_audit<T, V, F>(sampler: F, m: usize, n_paths: usize, seed: u64) -> IsometryAudit<T>
where
    T: Scalar,
    V: LinearValue<T>,
    F: Fn(&BrownianPath<T>) -> GridProcess<T, V> + Sync,
    StandardNormal: Distribution<T>,
{
    let stats = per_path_stats(&sampler, m, n_paths, seed, 1);
    let n = fromf::<T>(n_paths as f64);

    // Vector mean of the integrals, reduced in path order.
    let mean_integral = stats
        .iter()
        .fold(stats[0].0.zero_like(), |acc, (v, _, _)| acc.add(v))
        .scale_re(T::one() / n);
    let mean_err = mean_integral.norm();

    let norms_sq: Vec<T> = stats.iter().map(|(v, _, _)| v.norm_sqr()).collect();
    let quads: Vec<T> = stats.iter().map(|&(_, _, q)| q).collect();
    let (mean_sq, se_sq) = mean_stderr(&norms_sq);
    let (mean_quad, se_quad) = mean_stderr(&quads);
    // Conservative stderr for the norm of the vector mean.
    let mean_stderr_val = (mean_sq / n).sqrt();

    if mean_quad.is_zero() {
        return IsometryAudit {
            mean_err,
            mean_stderr: mean_stderr_val,
            isometry_ratio: T::nan(),
            ratio_stderr: T::nan(),
            degenerate: true,
            n_paths,
        };
    }

    let ratio = mean_sq / mean_quad;
    // Delta method with the sample covariance of (|I|^2, quad).
    let cov: T = {
        let pairs: Vec<T> = norms_sq
            .iter()
            .zip(&quads)
            .map(|(&a, &b)| (a - mean_sq) * (b - mean_quad))
            .collect();
        pairwise_sum(&pairs) / (n - T::one()) / n
    };
    let var_ratio = ratio
        * ratio
        * ((se_sq * se_sq) / (mean_sq * mean_sq) + (se_quad * se_quad) / (mean_quad * mean_quad)
            - fromf::<T>(2.0) * cov / (mean_sq * mean_quad));
    let ratio_stderr = var_ratio.max(T::zero()).sqrt();

    IsometryAudit {
        mean_err,
        mean_stderr: mean_stderr_val,
        isometry_ratio: ratio,
        ratio_stderr,
        degenerate: false,
        n_paths,
    }
}

/// Audit of the prior moment estimate
/// `E[|int X dB|^{2n}] <= (2n^2 - n)^n E[int |X|^{2n} ds]`.
pub fn moment_bound_audit<T, V, F>(
    sampler: F,
    n: u32,
    m: usize,
    n_paths: usize,
    seed: u64,
) -> MomentBoundAudit<T>
where
    T: Scalar,
    V: LinearValue<T>,
    F: Fn(&BrownianPath<T>) -> GridProcess<T, V> + Sync,
    StandardNormal: Distribution<T>,
{
    assert!(n >= 1, "moment order must be >= 1");
    let stats = per_path_stats(&sampler, m, n_paths, seed, n);
    let powers: Vec<T> = stats
        .iter()
        .map(|(v, _, _)| v.norm_sqr().powi(n as i32))
        .collect();
    let quads: Vec<T> = stats.iter().map(|&(_, _, q)| q).collect();
    let (lhs, lhs_se) = mean_stderr(&powers);
    let (quad_mean, quad_se) = mean_stderr(&quads);
    let constant = fromf::<T>(((2 * n * n - n) as f64).powi(n as i32));
    let rhs = constant * quad_mean;
    let rhs_se = constant * quad_se;
    let slack = fromf::<T>(3.0) * (lhs_se * lhs_se + rhs_se * rhs_se).sqrt();
    MomentBoundAudit {
        order: n,
        lhs_estimate: lhs,
        lhs_stderr: lhs_se,
        rhs_bound: rhs,
        rhs_stderr: rhs_se,
        satisfied: lhs <= rhs + slack,
    }
}

/// Audit of the exponential tail estimate
/// `Prob(|int X dB|^2 > gamma) <= exp(-gamma / (8 |X|_inf^2) + 1/4)`.
///
/// `sup_bound` is the configured uniform bound `|X|_inf`; it cannot be
/// inferred from samples.
pub fn tail_bound_audit<T, V, F>(
    sampler: F,
    sup_bound: Option<T>,
    gamma_grid: &[T],
    m: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<TailBoundRow<T>>, StochasticError>
where
    T: Scalar,
    V: LinearValue<T>,
    F: Fn(&BrownianPath<T>) -> GridProcess<T, V> + Sync,
    StandardNormal: Distribution<T>,
{
    let bound = sup_bound.ok_or(StochasticError::MissingSupBound)?;
    let stats = per_path_stats(&sampler, m, n_paths, seed, 1);
    let norms_sq: Vec<T> = stats.iter().map(|(v, _, _)| v.norm_sqr()).collect();
    let n = fromf::<T>(n_paths as f64);
    let quarter = fromf::<T>(0.25);
    let eight = fromf::<T>(8.0);
    Ok(gamma_grid
        .iter()
        .map(|&gamma| {
            let count = norms_sq.iter().filter(|&&v| v > gamma).count();
            let p = fromf::<T>(count as f64) / n;
            let stderr = (p * (T::one() - p) / n).sqrt().max(T::one() / n);
            let exponent = -gamma / (eight * bound * bound) + quarter;
            let analytic = exponent.exp();
            TailBoundRow {
                gamma,
                empirical_prob: p,
                empirical_stderr: stderr,
                bound: analytic,
                satisfied: p <= analytic + fromf::<T>(3.0) * stderr,
            }
        })
        .collect())
}
