//! The numerical kernels are generic over the real scalar; exercise the
//! f32 instantiation end to end at smoke-test tolerances.

use adiabatic_sde::linalg::{eigh, kernel_projection, CMatrix, CVector, OperatorFamily};
use adiabatic_sde::sde::{propagate_forward, SchemeConfig};
use adiabatic_sde::stochastic::BrownianPath;
use num_complex::Complex;

type C32 = Complex<f32>;

#[test]
fn f32_path_sampling_and_stats() {
    let path = BrownianPath::<f32>::sample(256, 11, 3);
    assert_eq!(path.steps(), 256);
    let again = BrownianPath::<f32>::sample(256, 11, 3);
    assert_eq!(path.values(), again.values());
    let refined = path.refine();
    assert!((refined.value(2) - path.value(1)).abs() < 1e-6);
}

#[test]
fn f32_linalg_roundtrip() {
    let a = CMatrix::<f32>::from_rows(&[
        vec![C32::new(1.0, 0.5), C32::new(0.0, -0.3)],
        vec![C32::new(0.0, 0.3), C32::new(2.0, -0.5)],
    ]);
    let x = CVector::new(vec![C32::new(1.0, -1.0), C32::new(0.5, 0.25)]);
    let b = a.mul_vec(&x);
    let x2 = a.solve_vec(&b).unwrap();
    assert!((&x2 - &x).norm() < 1e-4);

    let h = &a + &a.adjoint();
    let (vals, vecs) = eigh(&h).unwrap();
    for (l, v) in vals.iter().zip(&vecs) {
        let resid = (&h.mul_vec(v) - &v.scale(C32::new(*l, 0.0))).norm();
        assert!(resid < 1e-4, "residual {resid}");
    }

    let l1 = CMatrix::<f32>::diag(&[C32::new(0.0, 0.0), C32::new(-1.0, 0.0)]);
    let p = kernel_projection(&l1, 1e-4).unwrap();
    assert!((&p.mul_mat(&p) - &p).frobenius_norm() < 1e-5);
}

#[test]
fn f32_propagator_steps() {
    let l1 = OperatorFamily::<f32>::constant(CMatrix::diag(&[
        C32::new(-0.5, 0.0),
        C32::new(-0.5, 0.0),
    ]));
    let l2 = OperatorFamily::<f32>::zero(2);
    let path = BrownianPath::<f32>::sample(400, 5, 0);
    let traj = propagate_forward(&l1, &l2, 1.0f32, &path, &SchemeConfig::default()).unwrap();
    let expect = (-0.5f32).exp();
    assert!((traj.terminal()[(0, 0)].re - expect).abs() < 1e-4);
}
