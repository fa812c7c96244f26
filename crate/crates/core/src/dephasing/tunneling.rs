//! Per-path simulation of the dephasing Schroedinger equation and the
//! tunneling statistics: simulated level populations at `s = 1` against the
//! first-order backward-integral prediction.

use num_complex::Complex;
use rayon::prelude::*;

use super::frame::{build_frame, phase_prefixes, transition_coefficients};
use super::frame::{SpectralFrame, TransitionCoefficients};
use super::model::DephasingModel;
use super::DephasingError;
use crate::linalg::CVector;
use crate::scalar::{fromf, Scalar};
use crate::sde::{step_matrix, SchemeConfig, SdeError};
use crate::stochastic::BrownianPath;

/// One Monte Carlo tunneling sample.
#[derive(Debug, Clone)]
pub struct TunnelingSample<T: Scalar> {
    pub path_id: u64,
    pub eps: T,
    /// Simulated `|<psi_k(1), psi_eps(1)>|^2`, `k = 1..d`.
    pub t_sim: Vec<T>,
    /// First-order predictions `|int D_eps^(k) t_k dB|^2`; the simulated
    /// values scale as `eps * t_pred`.
    pub t_pred: Vec<T>,
    /// The predicted amplitudes `A_k` themselves.
    pub amplitudes: Vec<Complex<T>>,
    /// `sum_k t_sim[k]`.
    pub total_sim: T,
    /// Max norm drift `| |psi| - 1 |` along the trajectory.
    pub norm_drift: T,
    /// `| sum_{k>=0} |<psi_k, psi>|^2 - |psi|^2 |` at `s = 1`.
    pub completeness_defect: T,
}

/// Integrate the dephasing Schroedinger equation on one path; returns the
/// grid-indexed states. The exponential scheme keeps the norm at 1 to
/// roundoff because the step generator is exactly anti-Hermitian.
pub fn simulate_psi<T: Scalar>(
    model: &DephasingModel<T>,
    eps: T,
    path: &BrownianPath<T>,
    config: &SchemeConfig,
    psi0: Option<&CVector<T>>,
) -> Result<Vec<CVector<T>>, DephasingError> {
    let m = path.steps();
    let required = config.steps_per_epsilon as f64 / eps.to_f64().unwrap_or(f64::NAN);
    if (m as f64) < required {
        return Err(DephasingError::Sde(SdeError::GridTooCoarse { m, required }));
    }
    let l1 = model.l1_family();
    let l2 = model.l2_family();
    let dt = path.dt();
    let half = fromf::<T>(0.5);

    let mut psi = match psi0 {
        Some(v) => v.clone(),
        None => ground_state(model)?,
    };
    let mut states = Vec::with_capacity(m + 1);
    states.push(psi.clone());
    for i in 0..m {
        let s_mid = (fromf::<T>(i as f64) + half) * dt;
        let step = step_matrix(&l1, &l2, eps, dt, s_mid, path.increment(i), config.scheme);
        psi = step.mul_vec(&psi);
        states.push(psi.clone());
    }
    Ok(states)
}

/// Ground state `psi_0(0)` of the model (lowest energy at `s = 0`).
fn ground_state<T: Scalar>(model: &DephasingModel<T>) -> Result<CVector<T>, DephasingError> {
    let (_, vecs) = crate::linalg::eigh(&model.h_family().eval(T::zero()))?;
    Ok(vecs.into_iter().next().expect("nonempty spectrum"))
}

/// One tunneling sample on one path: simulate, project on the frame at
/// `s = 1`, and assemble the first-order predictions as right-endpoint
/// backward sums of `D_eps^(k)(1, s') t_k(s')`.
pub fn tunneling_sample<T: Scalar>(
    model: &DephasingModel<T>,
    frame: &SpectralFrame<T>,
    coefficients: &TransitionCoefficients<T>,
    eps: T,
    path: &BrownianPath<T>,
    config: &SchemeConfig,
) -> Result<TunnelingSample<T>, DephasingError> {
    let m = path.steps();
    if frame.steps() != m {
        return Err(DephasingError::GridMismatch(format!(
            "frame on {} steps, path on {}",
            frame.steps(),
            m
        )));
    }
    let d = frame.dim();
    let states = simulate_psi(model, eps, path, config, Some(frame.vector(0, 0)))?;

    let mut norm_drift = T::zero();
    for psi in &states {
        norm_drift = norm_drift.max((psi.norm() - T::one()).abs());
    }
    let psi_final = states.last().unwrap();

    let mut t_sim = Vec::with_capacity(d - 1);
    let mut projection_mass = frame.vector(0, m).dot(psi_final).norm_sqr();
    for k in 1..d {
        let p = frame.vector(k, m).dot(psi_final).norm_sqr();
        projection_mass = projection_mass + p;
        t_sim.push(p);
    }
    let total_sim = t_sim.iter().fold(T::zero(), |a, &b| a + b);
    let completeness_defect = (projection_mass - psi_final.norm_sqr()).abs();

    // Backward right-endpoint sums of D(1, s_j) t_k(s_j) dB_j.
    let inv_eps = T::one() / eps;
    let inv_sqrt_eps = T::one() / eps.sqrt();
    let mut amplitudes = Vec::with_capacity(d - 1);
    let mut t_pred = Vec::with_capacity(d - 1);
    for k in 1..d {
        let (energy_prefix, noise_prefix) = phase_prefixes(frame, k, path);
        let e_total = *energy_prefix.last().unwrap();
        let n_total = *noise_prefix.last().unwrap();
        let mut acc = Complex::<T>::new(T::zero(), T::zero());
        for j in 1..=m {
            let arg = -(e_total - energy_prefix[j]) * inv_eps
                - (n_total - noise_prefix[j]) * inv_sqrt_eps;
            let d_phase = Complex::from_polar(T::one(), arg);
            acc = acc
                + d_phase * coefficients.t[k - 1][j].scale(path.increment(j - 1));
        }
        amplitudes.push(acc);
        t_pred.push(acc.norm_sqr());
    }

    Ok(TunnelingSample {
        path_id: path.stream_id(),
        eps,
        t_sim,
        t_pred,
        amplitudes,
        total_sim,
        norm_drift,
        completeness_defect,
    })
}

/// The forward-integral representation of the per-level tunneling:
/// `|int D_eps^(k)(0, s') r_k(s') dB|^2` as left-endpoint sums.
pub fn forward_tunneling_form<T: Scalar>(
    frame: &SpectralFrame<T>,
    coefficients: &TransitionCoefficients<T>,
    eps: T,
    path: &BrownianPath<T>,
) -> Vec<T> {
    let d = frame.dim();
    let m = frame.steps();
    let inv_eps = T::one() / eps;
    let inv_sqrt_eps = T::one() / eps.sqrt();
    let mut out = Vec::with_capacity(d - 1);
    for k in 1..d {
        let (energy_prefix, noise_prefix) = phase_prefixes(frame, k, path);
        let mut acc = Complex::<T>::new(T::zero(), T::zero());
        for j in 1..=m {
            // D(0, s_{j-1}) carries the opposite orientation of the phase.
            let arg = energy_prefix[j - 1] * inv_eps + noise_prefix[j - 1] * inv_sqrt_eps;
            let d_phase = Complex::from_polar(T::one(), arg);
            acc = acc
                + d_phase * coefficients.r[k - 1][j - 1].scale(path.increment(j - 1));
        }
        out.push(acc.norm_sqr());
    }
    out
}

/// Monte Carlo ensemble on independent per-path streams: builds the frame
/// and the transition coefficients once and samples `n_paths` tunneling
/// records in path order. Path `p` uses stream `stream_base + p`, so
/// cross-epsilon batches can occupy disjoint stream ranges.
pub fn tunneling_ensemble<T: Scalar>(
    model: &DephasingModel<T>,
    eps: T,
    m: usize,
    n_paths: usize,
    seed: u64,
    stream_base: u64,
    gap_tol: T,
    config: &SchemeConfig,
) -> Result<
    (
        SpectralFrame<T>,
        TransitionCoefficients<T>,
        Vec<TunnelingSample<T>>,
    ),
    DephasingError,
>
where
    rand_distr::StandardNormal: rand_distr::Distribution<T>,
{
    let frame = build_frame(model, m, gap_tol)?;
    let coefficients = transition_coefficients(&frame, gap_tol)?;
    let samples: Result<Vec<_>, DephasingError> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let path = BrownianPath::<T>::sample(m, seed, stream_base + p as u64);
            tunneling_sample(model, &frame, &coefficients, eps, &path, config)
        })
        .collect();
    Ok((frame, coefficients, samples?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dephasing::model::gauge_subtract;
    use crate::linalg::{CMatrix, OperatorFamily};
    use crate::scalar::mean_stderr;
    use crate::C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn stationary_state_accumulates_pure_phase() {
        // Gamma = 0, constant H, eigenvector start: psi(s) = e^{-iEs/eps} psi(0).
        let h = OperatorFamily::constant(CMatrix::diag(&[c(0.0, 0.0), c(2.0, 0.0)]));
        let g = OperatorFamily::zero(2);
        let model = DephasingModel::new(h, g, 1e-10).unwrap();
        let eps = 0.5;
        let path = BrownianPath::sample(1000, 41, 0);
        let psi0 = CVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let states = simulate_psi(&model, eps, &path, &SchemeConfig::default(), Some(&psi0))
            .unwrap();
        let expect = (c(0.0, -2.0) * 1.0 / eps).exp();
        assert!((states[1000][1] - expect).norm() < 1e-10);
        assert!(states[1000][0].norm() < 1e-14);
    }

    #[test]
    fn pure_noise_closed_form() {
        // H = 0, Gamma = sqrt(g) diag(0,1), psi(0) = e2: the component picks
        // up exp(-i sqrt(g/eps) B_s) and keeps modulus 1.
        let gval = 0.7f64;
        let h = OperatorFamily::zero(2);
        let g = OperatorFamily::constant(CMatrix::diag(&[c(0.0, 0.0), c(gval.sqrt(), 0.0)]));
        let model = DephasingModel::new(h, g, 1e-10).unwrap();
        let eps = 0.2;
        let path = BrownianPath::sample(2000, 42, 0);
        let psi0 = CVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let states = simulate_psi(&model, eps, &path, &SchemeConfig::default(), Some(&psi0))
            .unwrap();
        for i in [500, 2000] {
            let expect = (c(0.0, -1.0) * (gval / eps).sqrt() * path.value(i)).exp();
            assert!((states[i][1] - expect).norm() < 1e-10, "i={i}");
            assert!((states[i].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_preserved_on_rotating_model() {
        let model = DephasingModel::<f64>::rotating(1.0, 1.0);
        let eps = 0.05;
        let path = BrownianPath::sample(4000, 43, 7);
        let states =
            simulate_psi(&model, eps, &path, &SchemeConfig::default(), None).unwrap();
        let mut drift: f64 = 0.0;
        for psi in &states {
            drift = drift.max((psi.norm() - 1.0).abs());
        }
        assert!(drift < 1e-9, "norm drift {drift}");
    }

    #[test]
    fn grid_constraint_checked() {
        let model = DephasingModel::<f64>::rotating(1.0, 1.0);
        let path = BrownianPath::sample(100, 44, 0);
        assert!(matches!(
            simulate_psi(&model, 0.05, &path, &SchemeConfig::default(), None),
            Err(DephasingError::Sde(SdeError::GridTooCoarse { .. }))
        ));
    }

    #[test]
    fn tunneling_sample_is_complete_and_consistent() {
        let model = DephasingModel::<f64>::rotating(1.0, 1.0);
        let eps = 0.1;
        let m = 2000;
        let frame = build_frame(&model, m, 1e-6).unwrap();
        let tc = transition_coefficients(&frame, 1e-6).unwrap();
        let cfg = SchemeConfig::default();
        // First-order consistency at the amplitude level: the projection on
        // the excited level is sqrt(eps) A_1 + O(eps) per path.
        let mut amp_gap = 0.0;
        let n_paths = 12;
        for p in 0..n_paths {
            let path = BrownianPath::sample(m, 45, p);
            let sample = tunneling_sample(&model, &frame, &tc, eps, &path, &cfg).unwrap();
            assert!(sample.completeness_defect < 1e-9);
            assert!(sample.norm_drift < 1e-9);
            assert!((sample.total_sim - sample.t_sim.iter().sum::<f64>()).abs() < 1e-15);
            amp_gap += (sample.t_sim[0].sqrt() - (eps * sample.t_pred[0]).sqrt()).abs()
                / n_paths as f64;
        }
        assert!(amp_gap < 3.0 * eps, "mean amplitude gap {amp_gap}");
    }

    #[test]
    fn static_model_has_floor_level_tunneling() {
        // No driving: T stays at the numerical floor.
        let h = OperatorFamily::constant(CMatrix::diag(&[c(0.0, 0.0), c(1.0, 0.0)]));
        let g = OperatorFamily::constant(CMatrix::diag(&[c(0.0, 0.0), c(1.0, 0.0)]));
        let model = DephasingModel::new(h, g, 1e-10).unwrap();
        let m = 2000;
        let frame = build_frame(&model, m, 1e-6).unwrap();
        let tc = transition_coefficients(&frame, 1e-6).unwrap();
        let path = BrownianPath::sample(m, 46, 1);
        let sample =
            tunneling_sample(&model, &frame, &tc, 0.1, &path, &SchemeConfig::default()).unwrap();
        assert!(sample.t_sim[0] < 1e-10, "{}", sample.t_sim[0]);
        assert!(sample.t_pred[0] < 1e-20);
    }

    #[test]
    fn forward_form_mean_matches_quadrature() {
        // E[|int D(0,s') r dB|^2] = int |r|^2 ds by the isometry.
        let model = DephasingModel::<f64>::rotating(1.0, 1.0);
        let m = 1000;
        let eps = 0.1;
        let frame = build_frame(&model, m, 1e-6).unwrap();
        let tc = transition_coefficients(&frame, 1e-6).unwrap();
        let n_paths = 3000;
        let vals: Vec<f64> = (0..n_paths)
            .map(|p| forward_tunneling_form(&frame, &tc, eps, &BrownianPath::sample(m, 47, p))[0])
            .collect();
        let (mean, se) = mean_stderr(&vals);
        let expect = tc.mean_tunneling(1, frame.dt());
        assert!(
            (mean - expect).abs() < 3.5 * se + 0.01,
            "mean {mean} vs {expect} (se {se})"
        );
    }

    #[test]
    fn backward_and_forward_forms_converge_together() {
        // Per-path difference between the backward and forward tunneling
        // forms shrinks with eps.
        let model = DephasingModel::<f64>::rotating(1.0, 1.0);
        let cfg = SchemeConfig::default();
        let mut gaps = Vec::new();
        for (eps, m) in [(0.4, 1000), (0.1, 2000), (0.025, 8000)] {
            let frame = build_frame(&model, m, 1e-6).unwrap();
            let tc = transition_coefficients(&frame, 1e-6).unwrap();
            let mut acc = 0.0;
            let n_paths = 24;
            for p in 0..n_paths {
                let path = BrownianPath::sample(m, 48, p);
                let sample = tunneling_sample(&model, &frame, &tc, eps, &path, &cfg).unwrap();
                let fwd = forward_tunneling_form(&frame, &tc, eps, &path);
                acc += (sample.t_pred[0] - fwd[0]).abs();
            }
            gaps.push(acc / n_paths as f64);
        }
        assert!(gaps[2] < gaps[1] && gaps[1] < gaps[0], "gaps {gaps:?}");
    }

    #[test]
    fn gauge_shift_leaves_simulated_tunneling_invariant() {
        // Shifting the dynamical phase of any level multiplies psi by a
        // unit-modulus factor, so the simulated level populations are
        // unchanged; with midpoint-frozen steppers the factor is exact.
        let model = DephasingModel::<f64>::rotating(1.0, 1.0);
        let shifted = gauge_subtract(&model, 1).unwrap();
        let m = 2000;
        let eps = 0.1;
        let cfg = SchemeConfig::default();
        let frame = build_frame(&model, m, 1e-6).unwrap();
        let path = BrownianPath::sample(m, 49, 5);
        let psi0 = frame.vector(0, 0).clone();
        let states = simulate_psi(&model, eps, &path, &cfg, Some(&psi0)).unwrap();
        let states_shifted = simulate_psi(&shifted, eps, &path, &cfg, Some(&psi0)).unwrap();
        for k in 0..2 {
            let p = frame.vector(k, m).dot(&states[m]).norm_sqr();
            let p_shift = frame.vector(k, m).dot(&states_shifted[m]).norm_sqr();
            assert!((p - p_shift).abs() < 1e-11, "level {k}: {p} vs {p_shift}");
        }
    }

    #[test]
    fn gauge_shift_phase_relation_is_exact() {
        // psi_shifted(s) = exp(+i Phi(s)) psi(s) with the phase accumulated
        // from midpoint sums, exactly for the exponential scheme.
        let model = DephasingModel::<f64>::rotating(1.0, 1.0);
        let shifted = gauge_subtract(&model, 1).unwrap();
        let m = 1000;
        let eps = 0.2;
        let cfg = SchemeConfig::default();
        let frame = build_frame(&model, m, 1e-6).unwrap();
        let path = BrownianPath::sample(m, 50, 2);
        let psi0 = frame.vector(0, 0).clone();
        let states = simulate_psi(&model, eps, &path, &cfg, Some(&psi0)).unwrap();
        let states_shifted = simulate_psi(&shifted, eps, &path, &cfg, Some(&psi0)).unwrap();
        // Midpoint sums of E_1 and sqrt(gamma_1) of the ORIGINAL model.
        let dt = 1.0 / m as f64;
        let mut phase = 0.0;
        for i in 0..m {
            let s_mid = (i as f64 + 0.5) * dt;
            let (vals, vecs) = crate::linalg::eigh(&model.h_family().eval(s_mid)).unwrap();
            let g = model.gamma_family().eval(s_mid);
            let gs = vecs[1].dot(&g.mul_vec(&vecs[1])).re;
            phase += vals[1] * dt / eps + gs * path.increment(i) / eps.sqrt();
        }
        let factor = C64::from_polar(1.0, phase);
        let diff = (&states_shifted[m] - &states[m].scale(factor)).norm();
        assert!(diff < 1e-9, "phase relation defect {diff}");
    }
}
