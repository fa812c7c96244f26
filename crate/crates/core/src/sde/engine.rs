//! One-step multiplicative schemes for `eps dU = L1 U ds + sqrt(eps) L2 U dB`.

use num_complex::Complex;
use num_traits::One;

use super::SdeError;
use crate::linalg::{unitary_phase_exp_from, CMatrix, OperatorFamily};
use crate::scalar::{fromf, Scalar};
use crate::stochastic::BrownianPath;

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// `U_{i+1} = (I + L1 dt/eps + L2 dB/sqrt(eps)) U_i`.
    EulerMaruyama,
    /// `U_{i+1} = exp((L1 - L2^2/2) dt/eps + L2 dB/sqrt(eps)) U_i`.
    ///
    /// The `-L2^2/2` correction makes the scheme target the same Ito
    /// equation as Euler-Maruyama. Under Assumption (A) the step generator
    /// has a dissipative Hermitian part, so every step is a contraction.
    Exponential,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::EulerMaruyama => "euler_maruyama",
            Scheme::Exponential => "exponential",
        }
    }
}

/// Stepper configuration.
#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Grid constraint `M >= K / eps`: steps per unit of `eps`.
    pub steps_per_epsilon: usize,
    /// Norm slack multiplier for the Euler-Maruyama contraction audit.
    pub tol_growth: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Exponential,
            steps_per_epsilon: 200,
            tol_growth: 10.0,
        }
    }
}

impl SchemeConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }

    fn check_grid<T: Scalar>(&self, m: usize, eps: T) -> Result<(), SdeError> {
        let required = self.steps_per_epsilon as f64 / eps.to_f64().unwrap_or(f64::NAN);
        if (m as f64) < required {
            return Err(SdeError::GridTooCoarse { m, required });
        }
        Ok(())
    }
}

/// Identifies the Brownian realization a trajectory was stepped on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathKey {
    pub seed: u64,
    pub stream_id: u64,
    pub level: u32,
}

impl PathKey {
    pub fn of<T: Scalar>(path: &BrownianPath<T>) -> Self {
        Self {
            seed: path.seed(),
            stream_id: path.stream_id(),
            level: path.level(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryDirection {
    /// `U(s_i, 0)` for `i = 0..=M`.
    Forward,
    /// `U(s_fixed, s_i)` for `i = 0..=fixed`.
    Backward { fixed_index: usize },
    /// `U(s_i, 0)^{-1}` stepped through the inverse equation.
    Inverse,
}

/// Grid-indexed propagator approximations on one Brownian realization.
#[derive(Debug, Clone)]
pub struct PropagatorTrajectory<T: Scalar> {
    matrices: Vec<CMatrix<T>>,
    eps: T,
    dt: T,
    scheme: Scheme,
    direction: TrajectoryDirection,
    path_key: PathKey,
}

impl<T: Scalar> PropagatorTrajectory<T> {
    pub fn matrix(&self, i: usize) -> &CMatrix<T> {
        &self.matrices[i]
    }

    pub fn matrices(&self) -> &[CMatrix<T>] {
        &self.matrices
    }

    pub fn terminal(&self) -> &CMatrix<T> {
        self.matrices.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn direction(&self) -> TrajectoryDirection {
        self.direction
    }

    pub fn path_key(&self) -> PathKey {
        self.path_key
    }
}

/// Threshold for recognizing an anti-Hermitian step generator, relative to
/// its norm. Anti-Hermitian generators take the exactly-unitary phase path.
const ANTI_HERMITIAN_REL_TOL: f64 = 1e-12;

fn exp_step<T: Scalar>(g: &CMatrix<T>) -> CMatrix<T> {
    let scale = g.frobenius_norm().max(T::one());
    let defect = (&g.adjoint() + g).frobenius_norm();
    if defect <= scale * fromf::<T>(ANTI_HERMITIAN_REL_TOL) {
        // G = -iK with K Hermitian.
        unitary_phase_exp_from(g)
    } else {
        g.expm()
    }
}

/// One-step transition matrix over `[s, s + dt]` with the families frozen
/// at `s_eval`.
///
/// Freezing at the step midpoint keeps the deterministic freezing bias at
/// `O(dt^2)` per step; the propagators feed remainder-scaling studies whose
/// signal would otherwise be masked.
pub fn step_matrix<T: Scalar>(
    l1: &OperatorFamily<T>,
    l2: &OperatorFamily<T>,
    eps: T,
    dt: T,
    s_eval: T,
    db: T,
    scheme: Scheme,
) -> CMatrix<T> {
    let a1 = l1.eval(s_eval);
    let a2 = l2.eval(s_eval);
    let dt_eps = dt / eps;
    let db_eps = db / eps.sqrt();
    match scheme {
        Scheme::EulerMaruyama => {
            let mut step = CMatrix::identity(a1.dim());
            step = step.axpy(Complex::new(dt_eps, T::zero()), &a1);
            step.axpy(Complex::new(db_eps, T::zero()), &a2)
        }
        Scheme::Exponential => {
            let a2sq = a2.mul_mat(&a2);
            let g = a1
                .axpy(Complex::new(fromf::<T>(-0.5), T::zero()), &a2sq)
                .scale_re(dt_eps)
                .axpy(Complex::new(db_eps, T::zero()), &a2);
            exp_step(&g)
        }
    }
}

/// Deterministic step (`L2 = 0`): the propagator of `eps dV = L1 V ds`.
pub fn deterministic_step_matrix<T: Scalar>(
    l1: &OperatorFamily<T>,
    eps: T,
    dt: T,
    s_eval: T,
    scheme: Scheme,
) -> CMatrix<T> {
    let a1 = l1.eval(s_eval);
    let dt_eps = dt / eps;
    match scheme {
        Scheme::EulerMaruyama => {
            CMatrix::identity(a1.dim()).axpy(Complex::new(dt_eps, T::zero()), &a1)
        }
        Scheme::Exponential => a1.scale_re(dt_eps).expm(),
    }
}

/// Forward propagator trajectory `U(s_i, 0)`, stepped left to right with
/// midpoint-frozen families.
pub fn propagate_forward<T: Scalar>(
    l1: &OperatorFamily<T>,
    l2: &OperatorFamily<T>,
    eps: T,
    path: &BrownianPath<T>,
    config: &SchemeConfig,
) -> Result<PropagatorTrajectory<T>, SdeError> {
    let m = path.steps();
    config.check_grid(m, eps)?;
    let dt = path.dt();
    let half = fromf::<T>(0.5);
    let mut matrices = Vec::with_capacity(m + 1);
    let mut u = CMatrix::identity(l1.dim());
    matrices.push(u.clone());
    for i in 0..m {
        let s_mid = (fromf::<T>(i as f64) + half) * dt;
        let step = step_matrix(l1, l2, eps, dt, s_mid, path.increment(i), config.scheme);
        u = step.mul_mat(&u);
        matrices.push(u.clone());
    }
    Ok(PropagatorTrajectory {
        matrices,
        eps,
        dt,
        scheme: config.scheme,
        direction: TrajectoryDirection::Forward,
        path_key: PathKey::of(path),
    })
}

/// Backward propagator trajectory `U(s_fixed, s_i)` for `i = 0..=fixed`,
/// stepped right to left with right-endpoint frozen families, following the
/// backward Ito equation.
pub fn propagate_backward<T: Scalar>(
    l1: &OperatorFamily<T>,
    l2: &OperatorFamily<T>,
    eps: T,
    fixed_index: usize,
    path: &BrownianPath<T>,
    config: &SchemeConfig,
) -> Result<PropagatorTrajectory<T>, SdeError> {
    let m = path.steps();
    config.check_grid(m, eps)?;
    assert!(fixed_index <= m, "fixed index beyond the grid");
    let dt = path.dt();
    let mut matrices = vec![CMatrix::identity(l1.dim()); fixed_index + 1];
    let mut w = CMatrix::identity(l1.dim());
    for i in (0..fixed_index).rev() {
        // Step over [s_i, s_{i+1}] with the integrand at the right endpoint.
        let s_right = fromf::<T>((i + 1) as f64) * dt;
        let step = step_matrix(l1, l2, eps, dt, s_right, path.increment(i), config.scheme);
        w = w.mul_mat(&step);
        matrices[i] = w.clone();
    }
    Ok(PropagatorTrajectory {
        matrices,
        eps,
        dt,
        scheme: config.scheme,
        direction: TrajectoryDirection::Backward { fixed_index },
        path_key: PathKey::of(path),
    })
}

/// Stepped inverse trajectory `U(s_i, 0)^{-1}` through the inverse Ito
/// equation `eps dU^{-1} = U^{-1} (-dL + L2^2 ds)`; matrix inversion is
/// avoided because it amplifies noise for near-singular propagators.
pub fn propagate_inverse<T: Scalar>(
    l1: &OperatorFamily<T>,
    l2: &OperatorFamily<T>,
    eps: T,
    path: &BrownianPath<T>,
    config: &SchemeConfig,
) -> Result<PropagatorTrajectory<T>, SdeError> {
    let m = path.steps();
    config.check_grid(m, eps)?;
    let dt = path.dt();
    let half = fromf::<T>(0.5);
    let dt_eps = dt / eps;
    let mut matrices = Vec::with_capacity(m + 1);
    let mut w = CMatrix::identity(l1.dim());
    matrices.push(w.clone());
    for i in 0..m {
        let s_mid = (fromf::<T>(i as f64) + half) * dt;
        let step = match config.scheme {
            Scheme::Exponential => {
                // Exact inverse of the forward step: exp(-G).
                let a1 = l1.eval(s_mid);
                let a2 = l2.eval(s_mid);
                let a2sq = a2.mul_mat(&a2);
                let g = a1
                    .axpy(Complex::new(fromf::<T>(-0.5), T::zero()), &a2sq)
                    .scale_re(dt_eps)
                    .axpy(Complex::new(path.increment(i) / eps.sqrt(), T::zero()), &a2);
                exp_step(&g.scale(-Complex::<T>::one()))
            }
            Scheme::EulerMaruyama => {
                let a1 = l1.eval(s_mid);
                let a2 = l2.eval(s_mid);
                let a2sq = a2.mul_mat(&a2);
                CMatrix::identity(l1.dim())
                    .axpy(Complex::new(-dt_eps, T::zero()), &a1)
                    .axpy(Complex::new(dt_eps, T::zero()), &a2sq)
                    .axpy(Complex::new(-path.increment(i) / eps.sqrt(), T::zero()), &a2)
            }
        };
        w = w.mul_mat(&step);
        matrices.push(w.clone());
    }
    Ok(PropagatorTrajectory {
        matrices,
        eps,
        dt,
        scheme: config.scheme,
        direction: TrajectoryDirection::Inverse,
        path_key: PathKey::of(path),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_generators_give_identity() {
        let l1 = OperatorFamily::<f64>::zero(2);
        let l2 = OperatorFamily::<f64>::zero(2);
        let path = BrownianPath::sample(400, 1, 0);
        let cfg = SchemeConfig::default();
        for scheme in [Scheme::EulerMaruyama, Scheme::Exponential] {
            let traj = propagate_forward(&l1, &l2, 1.0, &path, &SchemeConfig {
                scheme,
                ..cfg
            })
            .unwrap();
            for u in traj.matrices() {
                assert!((u - &CMatrix::identity(2)).frobenius_norm() < 1e-14);
            }
        }
    }

    #[test]
    fn scalar_deterministic_exponential() {
        // L1 = lambda I, L2 = 0: U(1,0) = exp(lambda/eps) I.
        let lam = -0.7;
        let eps = 0.5;
        let l1 = OperatorFamily::constant(CMatrix::diag(&[c(lam, 0.3), c(lam, 0.3)]));
        let l2 = OperatorFamily::zero(2);
        let path = BrownianPath::sample(400, 2, 0);
        let traj =
            propagate_forward(&l1, &l2, eps, &path, &SchemeConfig::default()).unwrap();
        let expect = (c(lam, 0.3) / eps).exp();
        assert!((traj.terminal()[(0, 0)] - expect).norm() < 1e-10);
    }

    #[test]
    fn grid_constraint_enforced() {
        let l1 = OperatorFamily::<f64>::zero(2);
        let l2 = OperatorFamily::<f64>::zero(2);
        let path = BrownianPath::sample(100, 3, 0);
        let err = propagate_forward(&l1, &l2, 0.1, &path, &SchemeConfig::default());
        assert!(matches!(err, Err(SdeError::GridTooCoarse { .. })));
    }

    #[test]
    fn unitary_dephasing_modulus_one() {
        // L1 = -gamma/2 diag(0,1), L2 = -i sqrt(gamma) diag(0,1): the
        // second component evolves by the pure phase exp(-i B_1 / sqrt(eps)).
        let gamma = 1.0f64;
        let eps = 0.25;
        let l1 = OperatorFamily::constant(CMatrix::diag(&[c(0.0, 0.0), c(-0.5 * gamma, 0.0)]));
        let l2 = OperatorFamily::constant(CMatrix::diag(&[c(0.0, 0.0), c(0.0, -gamma.sqrt())]));
        let path = BrownianPath::sample(1000, 4, 0);
        let traj =
            propagate_forward(&l1, &l2, eps, &path, &SchemeConfig::default()).unwrap();
        let u22 = traj.terminal()[(1, 1)];
        assert!((u22.norm() - 1.0).abs() < 1e-12, "|U22| = {}", u22.norm());
        let expect = (c(0.0, -1.0) * path.terminal() / eps.sqrt()).exp();
        assert!((u22 - expect).norm() < 1e-10);
    }

    #[test]
    fn exponential_inverse_is_exact() {
        let l1 = OperatorFamily::from_fn(2, 3, |s: f64| {
            CMatrix::from_rows(&[
                vec![c(-0.2 * s, 0.0), c(0.1, 0.05 * s)],
                vec![c(0.0, -0.1), c(-0.5, 0.0)],
            ])
        });
        let l2 = OperatorFamily::constant(
            CMatrix::from_rows(&[vec![c(0.0, -0.3), c(0.0, 0.1)], vec![c(0.0, 0.1), c(0.0, -0.2)]]),
        );
        let eps = 0.5;
        let path = BrownianPath::sample(500, 5, 1);
        let cfg = SchemeConfig::default();
        let fwd = propagate_forward(&l1, &l2, eps, &path, &cfg).unwrap();
        let inv = propagate_inverse(&l1, &l2, eps, &path, &cfg).unwrap();
        for i in [0, 100, 250, 500] {
            let prod = fwd.matrix(i).mul_mat(inv.matrix(i));
            assert!(
                (&prod - &CMatrix::identity(2)).frobenius_norm() < 1e-11,
                "index {i}"
            );
        }
    }

    #[test]
    fn backward_matches_forward_under_refinement() {
        // The backward equation defines the same propagator; with distinct
        // freezing points the discrete gap vanishes under refinement.
        let l1 = OperatorFamily::from_fn(2, 3, |s: f64| {
            CMatrix::from_rows(&[
                vec![c(0.0, -s), c(0.2, 0.0)],
                vec![c(-0.2, 0.0), c(-0.4, 0.3 * s)],
            ])
        });
        let l2 = OperatorFamily::from_fn(2, 3, |s: f64| {
            CMatrix::from_rows(&[vec![c(0.0, -0.5 * s), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, -0.3)]])
        });
        let eps = 1.0;
        let cfg = SchemeConfig::default();
        let base = BrownianPath::sample(200, 6, 2);
        let mut gaps = Vec::new();
        for k in 0..3 {
            let path = base.refine_times(k);
            let fwd = propagate_forward(&l1, &l2, eps, &path, &cfg).unwrap();
            let bwd = propagate_backward(&l1, &l2, eps, path.steps(), &path, &cfg).unwrap();
            gaps.push((fwd.terminal() - bwd.matrix(0)).frobenius_norm());
        }
        // At least O(sqrt(dt)): each refinement should shrink the gap.
        assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "gaps {gaps:?}");
    }

    #[test]
    fn mean_evolution_matches_deterministic_semigroup() {
        // E[U(1,0)] converges to the deterministic propagator of L1/eps.
        let l1 = OperatorFamily::constant(CMatrix::diag(&[c(-0.4, 0.2), c(-0.8, 0.0)]));
        let gam = CMatrix::from_rows(&[vec![c(0.4, 0.0), c(0.1, 0.0)], vec![c(0.1, 0.0), c(0.3, 0.0)]]);
        let l2 = OperatorFamily::constant(gam.scale(c(0.0, -1.0)));
        let eps = 1.0;
        let cfg = SchemeConfig::default();
        let n_paths = 4000;
        let mut mean = CMatrix::<f64>::zeros(2);
        for p in 0..n_paths {
            let path = BrownianPath::sample(256, 7, p);
            let traj = propagate_forward(&l1, &l2, eps, &path, &cfg).unwrap();
            mean = mean.axpy(c(1.0 / n_paths as f64, 0.0), traj.terminal());
        }
        // Averaging the Ito equation kills the noise term, so E[U] solves
        // eps dE[U] = L1 E[U] ds: exp(L1/eps) for a constant family.
        let expect = l1.eval(0.0).scale_re(1.0 / eps).expm();
        let diff = (&mean - &expect).frobenius_norm();
        // Monte Carlo tolerance ~ 3 * ||noise|| / sqrt(N).
        assert!(diff < 0.05, "mean evolution gap {diff}");
    }
}
