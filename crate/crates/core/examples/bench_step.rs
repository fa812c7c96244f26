use adiabatic_sde::linalg::{CMatrix, OperatorFamily};
use adiabatic_sde::sde::{propagate_forward, SchemeConfig};
use adiabatic_sde::stochastic::BrownianPath;
use num_complex::Complex;
use std::time::Instant;

fn main() {
    type C = Complex<f64>;
    let c = |re: f64, im: f64| C::new(re, im);
    let h = move |s: f64| {
        let th = std::f64::consts::PI * s / 4.0;
        let (sin, cos) = (th.sin(), th.cos());
        CMatrix::from_rows(&[
            vec![c(sin * sin, 0.0), c(-sin * cos, 0.0)],
            vec![c(-sin * cos, 0.0), c(cos * cos, 0.0)],
        ])
    };
    let l1 = OperatorFamily::from_fn(2, 3, move |s: f64| {
        let hm = h(s);
        let h2 = hm.mul_mat(&hm);
        hm.scale(c(0.0, -1.0)).axpy(c(-0.5, 0.0), &h2)
    });
    let l2 = OperatorFamily::from_fn(2, 3, move |s: f64| h(s).scale(c(0.0, -1.0)));
    let m = 200_000;
    let path = BrownianPath::sample(m, 1, 0);
    let cfg = SchemeConfig::default();
    let t0 = Instant::now();
    let traj = propagate_forward(&l1, &l2, 0.1, &path, &cfg).unwrap();
    let dt = t0.elapsed();
    println!("{} steps in {:?} => {:.0} ns/step (stored; norm {})",
        m, dt, dt.as_nanos() as f64 / m as f64, traj.terminal().frobenius_norm());
}
