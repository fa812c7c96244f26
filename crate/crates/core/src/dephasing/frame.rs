//! Gauge-fixed joint eigenframes of commuting `H(s)`, `Gamma(s)`, the
//! first-order transition coefficients, and dynamical phases.

use num_complex::Complex;

use super::model::DephasingModel;
use super::DephasingError;
use crate::expansion::cumulative_simpson;
use crate::linalg::{eigh, CVector, LinalgError};
use crate::scalar::{fromf, Scalar};
use crate::stochastic::BrownianPath;

/// Relative eigenvalue distance below which H-levels are treated as
/// degenerate and Gamma is diagonalized inside the cluster.
const CLUSTER_TOL: f64 = 1e-8;

/// Joint gauge-fixed eigendata on a uniform grid.
///
/// Eigenvector phases follow the discrete parallel-transport gauge: the
/// overlap between consecutive grid samples of a level is real positive, so
/// `<psi_k, psidot_k> = 0` up to `O(dt^2)`.
#[derive(Debug, Clone)]
pub struct SpectralFrame<T: Scalar> {
    dt: T,
    /// `energies[k][i] = E_k(s_i)`, levels ordered ascending at `s = 0` and
    /// followed by continuity.
    energies: Vec<Vec<T>>,
    /// `gamma_sqrt[k][i]`: the Gamma-eigenvalue of level `k`.
    gamma_sqrt: Vec<Vec<T>>,
    /// `vectors[k][i] = psi_k(s_i)`.
    vectors: Vec<Vec<CVector<T>>>,
    /// `vector_derivs[k][i]`: central differences of the gauge-fixed
    /// vectors.
    vector_derivs: Vec<Vec<CVector<T>>>,
}

impl<T: Scalar> SpectralFrame<T> {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn steps(&self) -> usize {
        self.energies[0].len() - 1
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn energy(&self, level: usize, i: usize) -> T {
        self.energies[level][i]
    }

    pub fn gamma_sqrt(&self, level: usize, i: usize) -> T {
        self.gamma_sqrt[level][i]
    }

    pub fn energy_grid(&self, level: usize) -> &[T] {
        &self.energies[level]
    }

    pub fn gamma_sqrt_grid(&self, level: usize) -> &[T] {
        &self.gamma_sqrt[level]
    }

    pub fn vector(&self, level: usize, i: usize) -> &CVector<T> {
        &self.vectors[level][i]
    }

    pub fn vector_deriv(&self, level: usize, i: usize) -> &CVector<T> {
        &self.vector_derivs[level][i]
    }
}

/// Build the joint frame on a uniform grid of `m` steps.
///
/// Procedure per grid point: diagonalize `H`, resolve `Gamma` inside
/// near-degenerate H-clusters, match levels to the previous point by
/// maximal overlap, then fix phases to the discrete parallel-transport
/// gauge. The simple-spectrum requirement applies to the `L1` eigenvalues
/// `-iE_k - gamma_k/2`.
pub fn build_frame<T: Scalar>(
    model: &DephasingModel<T>,
    m: usize,
    gap_tol: T,
) -> Result<SpectralFrame<T>, DephasingError> {
    let d = model.dim();
    let dt = T::one() / fromf::<T>(m as f64);
    let mut energies = vec![Vec::with_capacity(m + 1); d];
    let mut gamma_sqrt = vec![Vec::with_capacity(m + 1); d];
    let mut vectors: Vec<Vec<CVector<T>>> = vec![Vec::with_capacity(m + 1); d];

    for i in 0..=m {
        let s = fromf::<T>(i as f64) * dt;
        let (mut evals, mut evecs) = joint_eigendata(model, s)?;

        if i > 0 {
            // Continuity: match each previous level with the unmatched new
            // vector of maximal overlap, then make the overlap real
            // positive (discrete parallel transport).
            let mut taken = vec![false; d];
            let mut order = vec![0usize; d];
            for k in 0..d {
                let prev: &CVector<T> = &vectors[k][i - 1];
                let mut best = (T::zero(), usize::MAX);
                for (j, taken_j) in taken.iter().enumerate() {
                    if *taken_j {
                        continue;
                    }
                    let ov = prev.dot(&evecs[j]).norm();
                    if ov > best.0 {
                        best = (ov, j);
                    }
                }
                taken[best.1] = true;
                order[k] = best.1;
            }
            let reordered_vals: Vec<(T, T)> = order.iter().map(|&j| evals[j]).collect();
            let mut reordered_vecs: Vec<CVector<T>> =
                order.iter().map(|&j| evecs[j].clone()).collect();
            for (k, v) in reordered_vecs.iter_mut().enumerate() {
                let ov = vectors[k][i - 1].dot(v);
                let mag = ov.norm();
                if mag > T::zero() {
                    let phase = ov.conj() / Complex::new(mag, T::zero());
                    *v = v.scale(phase);
                }
            }
            evals = reordered_vals;
            evecs = reordered_vecs;
        }

        // Simple spectrum of L1 along the grid.
        for a in 0..d {
            for b in (a + 1)..d {
                let la = Complex::new(
                    -evals[a].1 * evals[a].1 * fromf::<T>(0.5),
                    -evals[a].0,
                );
                let lb = Complex::new(
                    -evals[b].1 * evals[b].1 * fromf::<T>(0.5),
                    -evals[b].0,
                );
                let distance = (la - lb).norm();
                if distance <= gap_tol {
                    return Err(DephasingError::SpectrumCollision {
                        s: s.to_f64().unwrap_or(f64::NAN),
                        distance: distance.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }

        for k in 0..d {
            energies[k].push(evals[k].0);
            gamma_sqrt[k].push(evals[k].1);
            vectors[k].push(evecs[k].clone());
        }
    }

    // psi-dot by central differences of the gauge-fixed vectors, second
    // order one-sided at the endpoints.
    let mut vector_derivs = Vec::with_capacity(d);
    for level_vectors in &vectors {
        let mut derivs = Vec::with_capacity(m + 1);
        let inv2 = Complex::new(T::one() / (dt + dt), T::zero());
        for i in 0..=m {
            let v = if i == 0 {
                level_vectors[0]
                    .scale(Complex::new(fromf::<T>(-3.0), T::zero()))
                    .axpy(Complex::new(fromf::<T>(4.0), T::zero()), &level_vectors[1])
                    .axpy(Complex::new(fromf::<T>(-1.0), T::zero()), &level_vectors[2])
                    .scale(inv2)
            } else if i == m {
                level_vectors[m]
                    .scale(Complex::new(fromf::<T>(3.0), T::zero()))
                    .axpy(Complex::new(fromf::<T>(-4.0), T::zero()), &level_vectors[m - 1])
                    .axpy(Complex::new(T::one(), T::zero()), &level_vectors[m - 2])
                    .scale(inv2)
            } else {
                (&level_vectors[i + 1] - &level_vectors[i - 1]).scale(inv2)
            };
            derivs.push(v);
        }
        vector_derivs.push(derivs);
    }

    Ok(SpectralFrame {
        dt,
        energies,
        gamma_sqrt,
        vectors,
        vector_derivs,
    })
}

/// Eigenpairs `(E_k, sqrt(gamma)_k)` with joint eigenvectors at one time,
/// ascending in energy.
fn joint_eigendata<T: Scalar>(
    model: &DephasingModel<T>,
    s: T,
) -> Result<(Vec<(T, T)>, Vec<CVector<T>>), DephasingError> {
    let d = model.dim();
    let hm = model.h_family().eval(s);
    let gm = model.gamma_family().eval(s);
    let (hvals, mut hvecs) = eigh(&hm)?;
    let scale = hvals
        .iter()
        .fold(T::one(), |acc, v| acc.max(v.abs()));
    let cluster_tol = scale * fromf::<T>(CLUSTER_TOL);

    // Resolve Gamma inside near-degenerate H-clusters.
    let mut gvals = vec![T::zero(); d];
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && (hvals[end] - hvals[end - 1]).abs() <= cluster_tol {
            end += 1;
        }
        if end - start == 1 {
            gvals[start] = hvecs[start].dot(&gm.mul_vec(&hvecs[start])).re;
        } else {
            // Gamma restricted to the cluster, diagonalized by Jacobi.
            let k = end - start;
            let sub = crate::linalg::CMatrix::from_fn(k, |a, b| {
                hvecs[start + a].dot(&gm.mul_vec(&hvecs[start + b]))
            });
            let (svals, svecs) = eigh(&sub)?;
            let mut rotated = Vec::with_capacity(k);
            for (col, sval) in svecs.iter().zip(&svals) {
                let mut v = CVector::zeros(d);
                for (a, hv) in hvecs[start..end].iter().enumerate() {
                    v = v.axpy(col[a], hv);
                }
                gvals[start + rotated.len()] = *sval;
                rotated.push(v.normalized());
            }
            for (a, v) in rotated.into_iter().enumerate() {
                hvecs[start + a] = v;
            }
        }
        start = end;
    }

    // Residual check: the joint basis must diagonalize Gamma to the
    // commutation tolerance.
    let herm_resid_tol = model.commutation_tol().max(fromf::<T>(1e-8));
    for (k, v) in hvecs.iter().enumerate() {
        let resid = (&gm.mul_vec(v) - &v.scale(Complex::new(gvals[k], T::zero()))).norm();
        if resid > herm_resid_tol * gm.frobenius_norm().max(T::one()) {
            return Err(DephasingError::NotCommuting {
                s: s.to_f64().unwrap_or(f64::NAN),
                norm: resid.to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    let vals: Vec<(T, T)> = hvals.iter().copied().zip(gvals).collect();
    Ok((vals, hvecs))
}

/// First-order transition coefficients on the frame grid:
///
/// ```text
///   t_k(s) = -i sqrt(gamma_k) <psi_k, psidot_0> / (-iE_k - gamma_k/2)
///   r_k(s) = -i sqrt(gamma_k) <psi_k, psidot_0> / (-iE_k + gamma_k/2)
/// ```
#[derive(Debug, Clone)]
pub struct TransitionCoefficients<T: Scalar> {
    /// `t[k-1][i]` for levels `k = 1..d`.
    pub t: Vec<Vec<Complex<T>>>,
    /// `r[k-1][i]`.
    pub r: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> TransitionCoefficients<T> {
    /// `int_0^1 |t_k|^2 ds` by composite Simpson, the theory mean of the
    /// scaled tunneling.
    pub fn mean_tunneling(&self, level: usize, dt: T) -> T {
        let sq: Vec<T> = self.t[level - 1].iter().map(|z| z.norm_sqr()).collect();
        *cumulative_simpson(&sq, dt).last().unwrap()
    }
}

pub fn transition_coefficients<T: Scalar>(
    frame: &SpectralFrame<T>,
    gap_tol: T,
) -> Result<TransitionCoefficients<T>, DephasingError> {
    let d = frame.dim();
    let m = frame.steps();
    let half = fromf::<T>(0.5);
    let mut t = Vec::with_capacity(d - 1);
    let mut r = Vec::with_capacity(d - 1);
    for k in 1..d {
        let mut tk = Vec::with_capacity(m + 1);
        let mut rk = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let e = frame.energy(k, i);
            let gs = frame.gamma_sqrt(k, i);
            let gamma = gs * gs;
            let denom_t = Complex::new(-half * gamma, -e);
            let denom_r = Complex::new(half * gamma, -e);
            if denom_t.norm() <= gap_tol || denom_r.norm() <= gap_tol {
                return Err(DephasingError::Linalg(LinalgError::GapViolation(format!(
                    "level {k} has |iE + gamma/2| below gap_tol at grid index {i}"
                ))));
            }
            let overlap = frame.vector(k, i).dot(frame.vector_deriv(0, i));
            let num = Complex::new(T::zero(), -gs) * overlap;
            tk.push(num / denom_t);
            rk.push(num / denom_r);
        }
        t.push(tk);
        r.push(rk);
    }
    Ok(TransitionCoefficients { t, r })
}

/// Prefix data for dynamical phases along one path: Simpson prefix of
/// `E_k` and left-endpoint forward Ito prefix of `sqrt(gamma_k) dB`.
pub(crate) fn phase_prefixes<T: Scalar>(
    frame: &SpectralFrame<T>,
    level: usize,
    path: &BrownianPath<T>,
) -> (Vec<T>, Vec<T>) {
    let m = frame.steps();
    let energy_prefix = cumulative_simpson(frame.energy_grid(level), frame.dt());
    let mut noise_prefix = Vec::with_capacity(m + 1);
    noise_prefix.push(T::zero());
    let mut acc = T::zero();
    for i in 0..m {
        acc = acc + frame.gamma_sqrt(level, i) * path.increment(i);
        noise_prefix.push(acc);
    }
    (energy_prefix, noise_prefix)
}

/// The dynamical phase
/// `D_eps^(k)(s_hi, s_lo) = exp(-(i/eps) int E_k dt - (i/sqrt(eps)) int sqrt(gamma_k) dB)`
/// between two grid indices; a unit-modulus complex number.
pub fn dynamical_phase<T: Scalar>(
    frame: &SpectralFrame<T>,
    level: usize,
    eps: T,
    path: &BrownianPath<T>,
    i_hi: usize,
    i_lo: usize,
) -> Complex<T> {
    assert!(i_hi >= i_lo, "phase indices must be ordered");
    let (energy_prefix, noise_prefix) = phase_prefixes(frame, level, path);
    let arg = -(energy_prefix[i_hi] - energy_prefix[i_lo]) / eps
        - (noise_prefix[i_hi] - noise_prefix[i_lo]) / eps.sqrt();
    Complex::from_polar(T::one(), arg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CMatrix, OperatorFamily};
    use crate::C64;

    #[test]
    fn static_model_has_constant_frame() {
        let h = OperatorFamily::constant(CMatrix::diag(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]));
        let g = OperatorFamily::constant(CMatrix::diag(&[C64::new(0.0, 0.0), C64::new(0.5, 0.0)]));
        let model = DephasingModel::new(h, g, 1e-10).unwrap();
        let frame = build_frame(&model, 64, 1e-6).unwrap();
        for i in 0..=64 {
            assert!((frame.energy(1, i) - 1.0).abs() < 1e-12);
            assert!((frame.gamma_sqrt(1, i) - 0.5).abs() < 1e-12);
            assert!(frame.vector_deriv(0, i).norm() < 1e-9, "i={i}");
        }
    }

    #[test]
    fn rotating_frame_overlap_is_rotation_rate() {
        // <psi_1, psidot_0> = theta' = pi/4 for the rotating model.
        let model = DephasingModel::<f64>::rotating(1.0, 1.0);
        let frame = build_frame(&model, 512, 1e-6).unwrap();
        for i in [0, 100, 256, 512] {
            let ov = frame.vector(1, i).dot(frame.vector_deriv(0, i));
            assert!(
                (ov.re - std::f64::consts::PI / 4.0).abs() < 1e-5 && ov.im.abs() < 1e-8,
                "i={i}: {ov}"
            );
        }
    }

    #[test]
    fn parallel_gauge_zeroes_diagonal_overlap() {
        let model = DephasingModel::<f64>::three_level();
        let frame = build_frame(&model, 256, 1e-6).unwrap();
        let dt = frame.dt();
        for k in 0..3 {
            for i in 1..255 {
                let ov = frame.vector(k, i).dot(frame.vector_deriv(k, i)).norm();
                assert!(ov < dt * dt * 100.0 + 1e-10, "k={k} i={i}: {ov}");
            }
        }
    }

    #[test]
    fn frame_is_orthonormal() {
        let model = DephasingModel::<f64>::three_level();
        let frame = build_frame(&model, 128, 1e-6).unwrap();
        for i in [0, 64, 128] {
            for a in 0..3 {
                for b in 0..3 {
                    let ov = frame.vector(a, i).dot(frame.vector(b, i)).norm();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((ov - expect).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn collision_detected() {
        // Two identical levels collide in the L1 spectrum.
        let h = OperatorFamily::constant(CMatrix::diag(&[
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
        ]));
        let g = OperatorFamily::constant(CMatrix::diag(&[
            C64::new(0.3, 0.0),
            C64::new(0.3, 0.0),
        ]));
        let model = DephasingModel::new(h, g, 1e-10).unwrap();
        assert!(matches!(
            build_frame(&model, 32, 1e-6),
            Err(DephasingError::SpectrumCollision { .. })
        ));
    }

    #[test]
    fn transition_coefficients_rotating_value() {
        // |t_1|^2 = gamma theta'^2 / (E^2 + gamma^2/4) = pi^2/20.
        let model = DephasingModel::<f64>::rotating(1.0, 1.0);
        let frame = build_frame(&model, 1024, 1e-6).unwrap();
        let tc = transition_coefficients(&frame, 1e-6).unwrap();
        let expect = std::f64::consts::PI.powi(2) / 20.0;
        for i in [0, 500, 1024] {
            let got = tc.t[0][i].norm_sqr();
            assert!((got - expect).abs() < 1e-4, "i={i}: {got} vs {expect}");
        }
        let mean = tc.mean_tunneling(1, frame.dt());
        assert!((mean - expect).abs() < 1e-4, "mean {mean}");
    }

    #[test]
    fn t_and_r_have_equal_modulus() {
        let model = DephasingModel::<f64>::three_level();
        let frame = build_frame(&model, 256, 1e-6).unwrap();
        let tc = transition_coefficients(&frame, 1e-6).unwrap();
        for k in 0..2 {
            for i in 0..=256 {
                let dt_mod = (tc.t[k][i].norm_sqr() - tc.r[k][i].norm_sqr()).abs();
                assert!(dt_mod < 1e-12, "k={k} i={i}");
            }
        }
    }

    #[test]
    fn zero_noise_level_has_zero_coefficient() {
        // gamma_1 = 0: no noise coupling, t_1 = 0.
        let model = DephasingModel::<f64>::rotating(1.0, 0.0);
        let frame = build_frame(&model, 128, 1e-6).unwrap();
        let tc = transition_coefficients(&frame, 1e-6).unwrap();
        for i in 0..=128 {
            assert!(tc.t[0][i].norm() < 1e-12);
        }
    }

    #[test]
    fn static_ground_state_has_zero_coefficient() {
        // psidot_0 = 0 for a constant model.
        let h = OperatorFamily::constant(CMatrix::diag(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]));
        let g = OperatorFamily::constant(CMatrix::diag(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]));
        let model = DephasingModel::new(h, g, 1e-10).unwrap();
        let frame = build_frame(&model, 64, 1e-6).unwrap();
        let tc = transition_coefficients(&frame, 1e-6).unwrap();
        for i in 0..=64 {
            assert!(tc.t[0][i].norm() < 1e-10);
        }
    }

    #[test]
    fn dynamical_phase_is_unit_modulus() {
        let model = DephasingModel::<f64>::rotating(1.0, 1.0);
        let frame = build_frame(&model, 256, 1e-6).unwrap();
        let path = BrownianPath::sample(256, 5, 0);
        let d = dynamical_phase(&frame, 1, 0.1, &path, 256, 0);
        assert!((d.norm() - 1.0).abs() < 1e-13);
        let trivial = dynamical_phase(&frame, 1, 0.1, &path, 100, 100);
        assert!((trivial - C64::new(1.0, 0.0)).norm() < 1e-13);
        let ground = dynamical_phase(&frame, 0, 0.1, &path, 256, 0);
        assert!((ground - C64::new(1.0, 0.0)).norm() < 1e-13);
    }
}
