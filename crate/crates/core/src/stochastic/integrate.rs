//! Discrete forward and backward Ito sums.

use super::path::BrownianPath;
use super::process::{Adaptation, GridProcess, LinearValue};
use super::StochasticError;
use crate::scalar::Scalar;

fn check_grid<T: Scalar, V: LinearValue<T>>(
    x: &GridProcess<T, V>,
    path: &BrownianPath<T>,
) -> Result<(), StochasticError> {
    if x.len() != path.steps() + 1 {
        return Err(StochasticError::GridMismatch {
            values: x.len(),
            steps: path.steps(),
        });
    }
    Ok(())
}

/// Forward Ito integral: left-endpoint sums `sum_i X_{i-1} dB_i`, so the
/// increment points to the future of the integrand.
pub fn forward_ito<T: Scalar, V: LinearValue<T>>(
    x: &GridProcess<T, V>,
    path: &BrownianPath<T>,
) -> Result<V, StochasticError> {
    if x.adaptation() == Adaptation::Backward {
        return Err(StochasticError::AdaptationMismatch {
            integral: "forward",
            tag: "backward",
        });
    }
    check_grid(x, path)?;
    let mut acc = x.value(0).zero_like();
    for i in 0..path.steps() {
        acc = acc.add(&x.value(i).scale_re(path.increment(i)));
    }
    Ok(acc)
}

/// Backward Ito integral: right-endpoint sums `sum_i Y_i (B_i - B_{i-1})`,
/// so the increment points to the past of a future-adapted integrand.
pub fn backward_ito<T: Scalar, V: LinearValue<T>>(
    y: &GridProcess<T, V>,
    path: &BrownianPath<T>,
) -> Result<V, StochasticError> {
    if y.adaptation() == Adaptation::Forward {
        return Err(StochasticError::AdaptationMismatch {
            integral: "backward",
            tag: "forward",
        });
    }
    check_grid(y, path)?;
    let mut acc = y.value(0).zero_like();
    for i in 0..path.steps() {
        acc = acc.add(&y.value(i + 1).scale_re(path.increment(i)));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::mean_stderr;
    use num_complex::Complex;

    type C = Complex<f64>;

    fn constant_process(m: usize, c: f64, tag: Adaptation) -> GridProcess<f64, C> {
        GridProcess::new(vec![C::new(c, 0.0); m + 1], tag)
    }

    #[test]
    fn constant_integrand_gives_scaled_terminal() {
        let path = BrownianPath::<f64>::sample(128, 1, 0);
        let x = constant_process(128, 2.5, Adaptation::TwoSided);
        let f = forward_ito(&x, &path).unwrap();
        let b = backward_ito(&x, &path).unwrap();
        assert!((f.re - 2.5 * path.terminal()).abs() < 1e-13);
        assert!((b.re - 2.5 * path.terminal()).abs() < 1e-13);
    }

    #[test]
    fn zero_integrand() {
        let path = BrownianPath::<f64>::sample(32, 1, 1);
        let x = constant_process(32, 0.0, Adaptation::Forward);
        assert_eq!(forward_ito(&x, &path).unwrap(), C::new(0.0, 0.0));
    }

    #[test]
    fn adaptation_is_enforced() {
        let path = BrownianPath::<f64>::sample(8, 1, 2);
        let back = constant_process(8, 1.0, Adaptation::Backward);
        let fwd = constant_process(8, 1.0, Adaptation::Forward);
        assert!(matches!(
            forward_ito(&back, &path),
            Err(StochasticError::AdaptationMismatch { .. })
        ));
        assert!(matches!(
            backward_ito(&fwd, &path),
            Err(StochasticError::AdaptationMismatch { .. })
        ));
        assert!(backward_ito(&back, &path).is_ok());
    }

    #[test]
    fn grid_mismatch_detected() {
        let path = BrownianPath::<f64>::sample(8, 1, 3);
        let x = constant_process(9, 1.0, Adaptation::Forward);
        assert!(matches!(
            forward_ito(&x, &path),
            Err(StochasticError::GridMismatch { .. })
        ));
    }

    /// The two endpoint conventions differ exactly by the discrete
    /// quadratic variation of the integrand.
    #[test]
    fn endpoint_difference_is_quadratic_variation() {
        for stream in 0..20u64 {
            let path = BrownianPath::<f64>::sample(256, 17, stream);
            let vals: Vec<C> = path.values().iter().map(|&b| C::new(b, 0.0)).collect();
            let fwd = forward_ito(&GridProcess::new(vals.clone(), Adaptation::TwoSided), &path)
                .unwrap();
            let bwd =
                backward_ito(&GridProcess::new(vals, Adaptation::TwoSided), &path).unwrap();
            let qv: f64 = (0..path.steps())
                .map(|i| path.increment(i) * path.increment(i))
                .sum();
            assert!(((bwd - fwd).re - qv).abs() < 1e-12);
        }
    }

    /// Ito's classic: integrating B against dB with left endpoints tends to
    /// (B_1^2 - 1)/2. Oracle: grid-refinement (Richardson-style) check that
    /// the gap to the closed form halves in L2 as M -> 4M.
    #[test]
    fn ito_classic_refinement() {
        let n_paths = 400;
        let mut coarse_err = Vec::new();
        let mut fine_err = Vec::new();
        for p in 0..n_paths {
            let base = BrownianPath::<f64>::sample(64, 23, p);
            let fine = base.refine_times(2);
            for (path, out) in [(&base, &mut coarse_err), (&fine, &mut fine_err)] {
                let vals: Vec<C> = path.values().iter().map(|&b| C::new(b, 0.0)).collect();
                let got =
                    forward_ito(&GridProcess::new(vals, Adaptation::Forward), path).unwrap();
                let target = 0.5 * (path.terminal() * path.terminal() - 1.0);
                out.push((got.re - target) * (got.re - target));
            }
        }
        let (coarse_ms, _) = mean_stderr(&coarse_err);
        let (fine_ms, _) = mean_stderr(&fine_err);
        // L2 error scales like sqrt(dt): mean squares scale like dt.
        let ratio = coarse_ms / fine_ms;
        assert!(
            ratio > 2.0 && ratio < 8.0,
            "expected ~4x reduction, got {ratio}"
        );
    }

    /// Deterministic integrand s against dB: ensemble mean 0, variance
    /// 1/3 = int_0^1 s^2 ds by the isometry.
    #[test]
    fn deterministic_linear_integrand_moments() {
        let n_paths = 4000;
        let mut vals = Vec::with_capacity(n_paths);
        for p in 0..n_paths {
            let path = BrownianPath::<f64>::sample(128, 31, p as u64);
            let y = GridProcess::<f64, C>::deterministic(128, |s| C::new(s, 0.0));
            vals.push(backward_ito(&y, &path).unwrap().re);
        }
        let (mean, se) = mean_stderr(&vals);
        assert!(mean.abs() < 3.5 * se.max(1e-3), "mean {mean} stderr {se}");
        let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
        let (var, vse) = mean_stderr(&sq);
        assert!(
            (var - 1.0 / 3.0).abs() < 3.5 * vse + 2.0 / 128.0,
            "variance {var} vs 1/3"
        );
    }
}
