//! Cross-module consistency: the generic expansion recursion and the
//! dephasing frame must describe the same first-order theory.

use adiabatic_sde::dephasing::{build_frame, transition_coefficients, DephasingModel};
use adiabatic_sde::expansion::expansion_coefficients;
use adiabatic_sde::linalg::CVector;

/// The kernel section of the recursion is the gauge-fixed ground
/// eigenvector, and `L2 b_1` expands into the transition coefficients.
#[test]
fn recursion_matches_frame_first_order() {
    let model = DephasingModel::<f64>::rotating(1.0, 1.0);
    let m = 1024;
    let frame = build_frame(&model, m, 1e-6).unwrap();
    let tc = transition_coefficients(&frame, 1e-6).unwrap();
    let l1 = model.l1_family();
    let l2 = model.l2_family();

    let a0 = frame.vector(0, 0).clone();
    let coeffs =
        expansion_coefficients(&l1, &[a0, CVector::zeros(2)], 1, m, 1e-6).unwrap();

    let mut worst_a0: f64 = 0.0;
    let mut worst_l2b1: f64 = 0.0;
    for i in (0..=m).step_by(16) {
        // a_0(s) equals the gauge-fixed eigenvector.
        worst_a0 = worst_a0.max((coeffs.a(0, i) - frame.vector(0, i)).norm());

        // L2 b_1 = sum_k t_k psi_k (here only k = 1).
        let s = i as f64 / m as f64;
        let l2b1 = l2.eval(s).mul_vec(coeffs.b(1, i));
        let expect = frame.vector(1, i).scale(tc.t[0][i]);
        worst_l2b1 = worst_l2b1.max((&l2b1 - &expect).norm());
    }
    assert!(worst_a0 < 1e-6, "a0 vs psi0: {worst_a0}");
    assert!(worst_l2b1 < 1e-4, "L2 b1 vs t_k psi_k: {worst_l2b1}");
}

/// Same check on the three-level model, where two transition channels are
/// active.
#[test]
fn recursion_matches_frame_three_level() {
    let model = DephasingModel::<f64>::three_level();
    let m = 512;
    let frame = build_frame(&model, m, 1e-6).unwrap();
    let tc = transition_coefficients(&frame, 1e-6).unwrap();
    let l1 = model.l1_family();
    let l2 = model.l2_family();

    let a0 = frame.vector(0, 0).clone();
    let coeffs = expansion_coefficients(
        &l1,
        &[a0, CVector::zeros(3)],
        1,
        m,
        1e-6,
    )
    .unwrap();

    let mut worst: f64 = 0.0;
    for i in (0..=m).step_by(32) {
        let s = i as f64 / m as f64;
        let l2b1 = l2.eval(s).mul_vec(coeffs.b(1, i));
        let mut expect = CVector::<f64>::zeros(3);
        for k in 1..3 {
            expect = expect.axpy(tc.t[k - 1][i], frame.vector(k, i));
        }
        worst = worst.max((&l2b1 - &expect).norm());
    }
    assert!(worst < 1e-4, "L2 b1 vs sum t_k psi_k: {worst}");
}

/// The mean of the scaled simulated tunneling approaches the quadrature of
/// |t_1|^2 as eps shrinks (small ensemble, coarse gate; the acceptance
/// suite pins the criterion-scale version).
#[test]
fn mean_tunneling_tracks_quadrature() {
    use adiabatic_sde::dephasing::tunneling_ensemble;
    use adiabatic_sde::scalar::mean_stderr;
    use adiabatic_sde::sde::SchemeConfig;

    let model = DephasingModel::<f64>::rotating(1.0, 1.0);
    let cfg = SchemeConfig::default();
    let eps = 0.05;
    let (frame, tc, samples) =
        tunneling_ensemble(&model, eps, 4000, 600, 97, 0, 1e-6, &cfg).unwrap();
    let mu = tc.mean_tunneling(1, frame.dt());
    let scaled: Vec<f64> = samples.iter().map(|s| s.t_sim[0] / eps).collect();
    let (mean, se) = mean_stderr(&scaled);
    assert!(
        (mean - mu).abs() < 4.0 * se + 0.1 * mu,
        "mean {mean} vs {mu} (se {se})"
    );
}
