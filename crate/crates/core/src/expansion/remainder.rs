//! Remainder-scaling studies: how fast does the truncated expansion
//! approach the simulated solution as `eps` shrinks?
//!
//! The driver streams each trajectory without materializing it; grids are
//! refined dyadically from a common base realization so the estimates share
//! their randomness across `eps`.

use num_complex::Complex;
use num_traits::One;

use super::coefficients::expansion_coefficients;
use super::ExpansionError;
use crate::linalg::{unitary_exp_into, CMatrix, CVector, OperatorFamily};
use crate::scalar::{fromf, mean_stderr, Scalar};
use crate::sde::{Scheme, SchemeConfig, SdeError};
use crate::stats::{convergence_fit, SlopeFit};
use crate::stochastic::BrownianPath;

/// Fixed coefficient grid; the coefficients are `eps`-independent smooth
/// functions, evaluated on simulation grids by cubic interpolation.
const COEFF_GRID_STEPS: usize = 4096;

/// One point of the study: `eps` and the simulation step count. Step counts
/// must be dyadic multiples of the first entry so all grids refine the same
/// base realization.
#[derive(Debug, Clone, Copy)]
pub struct RemainderGrid<T: Scalar> {
    pub eps: T,
    pub steps: usize,
}

/// Study result: per truncation order, mean sup-norm deviations per `eps`
/// and the fitted log-log slope.
#[derive(Debug, Clone)]
pub struct RemainderScaling<T: Scalar> {
    pub eps: Vec<T>,
    /// `mean_delta[n][k]`: order-`n` truncation at `eps[k]`.
    pub mean_delta: Vec<Vec<T>>,
    pub stderr: Vec<Vec<T>>,
    /// Fitted slope per truncation order; expected about `n + 1/2`.
    pub slopes: Vec<SlopeFit>,
}

/// Cubic Lagrange interpolation on a uniform grid of vectors.
struct GridInterp<'a, T: Scalar> {
    values: &'a [CVector<T>],
    inv_dt: T,
}

impl<'a, T: Scalar> GridInterp<'a, T> {
    fn new(values: &'a [CVector<T>], dt: T) -> Self {
        Self {
            values,
            inv_dt: T::one() / dt,
        }
    }

    fn eval_into(&self, s: T, out: &mut CVector<T>) {
        let n = self.values.len();
        let x = (s * self.inv_dt).to_f64().unwrap_or(0.0);
        let i = (x.floor() as isize).clamp(0, n as isize - 1) as usize;
        // 4-point stencil around i, clamped to the grid.
        let lo = i.saturating_sub(1).min(n - 4);
        let t = x - lo as f64;
        // Lagrange weights for nodes 0,1,2,3 at position t.
        let w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
        let w1 = t * (t - 2.0) * (t - 3.0) / 2.0;
        let w2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
        let w3 = t * (t - 1.0) * (t - 2.0) / 6.0;
        let ws = [w0, w1, w2, w3];
        out.fill_zero();
        for (k, &w) in ws.iter().enumerate() {
            out.axpy_assign(
                Complex::new(fromf::<T>(w), T::zero()),
                &self.values[lo + k],
            );
        }
    }
}

/// Precomputed per-grid-point step generators: the step over
/// `[s_i, s_{i+1}]` is built from `drift[i] + noise[i] * dB`.
struct StepTable<T: Scalar> {
    drift: Vec<CMatrix<T>>,
    noise: Vec<CMatrix<T>>,
    anti_hermitian: bool,
    scheme: Scheme,
}

impl<T: Scalar> StepTable<T> {
    fn build(
        l1: &OperatorFamily<T>,
        l2: &OperatorFamily<T>,
        eps: T,
        m: usize,
        scheme: Scheme,
    ) -> Self {
        let dt = T::one() / fromf::<T>(m as f64);
        let dt_eps = dt / eps;
        let inv_sqrt_eps = T::one() / eps.sqrt();
        let half = fromf::<T>(0.5);
        let mut drift = Vec::with_capacity(m);
        let mut noise = Vec::with_capacity(m);
        let mut anti = true;
        let herm_tol = fromf::<T>(1e-12);
        for i in 0..m {
            let s_mid = (fromf::<T>(i as f64) + half) * dt;
            let a1 = l1.eval(s_mid);
            let a2 = l2.eval(s_mid);
            let d = match scheme {
                Scheme::Exponential => {
                    let a2sq = a2.mul_mat(&a2);
                    a1.axpy(Complex::new(-half, T::zero()), &a2sq)
                        .scale_re(dt_eps)
                }
                Scheme::EulerMaruyama => a1.scale_re(dt_eps),
            };
            let nmat = a2.scale_re(inv_sqrt_eps);
            if anti {
                let scale = d.frobenius_norm().max(nmat.frobenius_norm()).max(T::one());
                let defect = (&d.adjoint() + &d).frobenius_norm()
                    + (&nmat.adjoint() + &nmat).frobenius_norm();
                anti = defect <= herm_tol * scale;
            }
            drift.push(d);
            noise.push(nmat);
        }
        Self {
            drift,
            noise,
            anti_hermitian: anti,
            scheme,
        }
    }
}

/// Workspace matrices for the streaming loop.
struct Workspace<T: Scalar> {
    g: CMatrix<T>,
    step: CMatrix<T>,
    step_adj: CMatrix<T>,
    u: CMatrix<T>,
    uinv: CMatrix<T>,
    tmp: CMatrix<T>,
    vec_a: CVector<T>,
    vec_b: CVector<T>,
    vec_c: CVector<T>,
}

impl<T: Scalar> Workspace<T> {
    fn new(dim: usize) -> Self {
        Self {
            g: CMatrix::zeros(dim),
            step: CMatrix::zeros(dim),
            step_adj: CMatrix::zeros(dim),
            u: CMatrix::identity(dim),
            uinv: CMatrix::identity(dim),
            tmp: CMatrix::zeros(dim),
            vec_a: CVector::zeros(dim),
            vec_b: CVector::zeros(dim),
            vec_c: CVector::zeros(dim),
        }
    }

    fn reset(&mut self) {
        let dim = self.u.dim();
        self.u.copy_from(&CMatrix::identity(dim));
        self.uinv.copy_from(&CMatrix::identity(dim));
    }
}

/// Sup-norm deviation of each truncation order from the simulated solution
/// on one path. `x0` is the slow-manifold start.
#[allow(clippy::too_many_arguments)]
fn sup_deviation_per_order<T: Scalar>(
    table: &StepTable<T>,
    coeff_interp: &CoeffInterps<'_, T>,
    order: usize,
    eps: T,
    x0: &CVector<T>,
    path: &BrownianPath<T>,
    ws: &mut Workspace<T>,
) -> Vec<T> {
    let m = path.steps();
    let dt = path.dt();
    let dim = x0.len();
    let sqrt_eps = eps.sqrt();
    ws.reset();
    let mut q: Vec<CVector<T>> = (0..=order).map(|_| CVector::zeros(dim)).collect();
    let mut sup = vec![T::zero(); order + 1];
    let mut eps_pows = vec![T::one(); order + 1];
    for n in 1..=order {
        eps_pows[n] = eps_pows[n - 1] * eps;
    }

    // Deviation at a grid point, accumulated order by order.
    let assess = |ws: &mut Workspace<T>,
                      q: &[CVector<T>],
                      sup: &mut [T],
                      s: T| {
        ws.u.mul_vec_into(x0, &mut ws.vec_a); // X_sim
        // X_trunc accumulates in vec_b.
        coeff_interp.a[0].eval_into(s, &mut ws.vec_b);
        for n in 0..=order {
            if n > 0 {
                let w = Complex::new(eps_pows[n], T::zero());
                coeff_interp.a[n].eval_into(s, &mut ws.vec_c);
                ws.vec_b.axpy_assign(w, &ws.vec_c);
                coeff_interp.b[n].eval_into(s, &mut ws.vec_c);
                ws.vec_b.axpy_assign(w, &ws.vec_c);
                // stochastic term: eps^{n-1/2} U q_n
                let sto_w = Complex::new(eps_pows[n] / sqrt_eps, T::zero());
                ws.u.mul_vec_into(&q[n], &mut ws.vec_c);
                ws.vec_b.axpy_assign(sto_w, &ws.vec_c);
            }
            let mut dev = T::zero();
            for k in 0..dim {
                dev = dev + (ws.vec_a[k] - ws.vec_b[k]).norm_sqr();
            }
            sup[n] = sup[n].max(dev.sqrt());
        }
    };

    assess(ws, &q, &mut sup, T::zero());
    for i in 0..m {
        let db = path.increment(i);
        ws.g.set_axpy(&table.drift[i], Complex::new(db, T::zero()), &table.noise[i]);
        match table.scheme {
            Scheme::Exponential if table.anti_hermitian => {
                unitary_exp_into(&ws.g, &mut ws.step);
                ws.step.adjoint_into(&mut ws.step_adj);
            }
            Scheme::Exponential => {
                ws.step.copy_from(&ws.g.expm());
                ws.step_adj
                    .copy_from(&ws.g.scale(-Complex::<T>::one()).expm());
            }
            Scheme::EulerMaruyama => {
                // step = I + G; stepped inverse = I - G + N^2 dt-part.
                let id = CMatrix::identity(ws.g.dim());
                ws.step.set_axpy(&id, Complex::one(), &ws.g);
                let n2 = table.noise[i].mul_mat(&table.noise[i]).scale_re(dt);
                let minus = id.axpy(-Complex::<T>::one(), &ws.g);
                ws.step_adj.set_axpy(&minus, Complex::one(), &n2);
            }
        }
        ws.step.mul_into(&ws.u, &mut ws.tmp);
        std::mem::swap(&mut ws.u, &mut ws.tmp);
        ws.uinv.mul_into(&ws.step_adj, &mut ws.tmp);
        std::mem::swap(&mut ws.uinv, &mut ws.tmp);

        let s_right = fromf::<T>((i + 1) as f64) * dt;
        for n in 1..=order {
            coeff_interp.l2b[n].eval_into(s_right, &mut ws.vec_a);
            ws.uinv.mul_vec_into(&ws.vec_a, &mut ws.vec_b);
            q[n].axpy_assign(Complex::new(db, T::zero()), &ws.vec_b);
        }
        assess(ws, &q, &mut sup, s_right);
    }
    sup
}

struct CoeffInterps<'a, T: Scalar> {
    a: Vec<GridInterp<'a, T>>,
    b: Vec<GridInterp<'a, T>>,
    l2b: Vec<GridInterp<'a, T>>,
}

/// Run the remainder-scaling study.
///
/// `grids` pairs each `eps` with its simulation step count; step counts
/// must be dyadic multiples of the first so all of them refine one base
/// realization per path (common random numbers across `eps`). Initial data
/// is `a_0(0) = a0_init` with higher-order kernel data zero; every
/// simulation starts on the slow manifold of the requested order.
#[allow(clippy::too_many_arguments)]
pub fn remainder_scaling<T: Scalar>(
    l1: &OperatorFamily<T>,
    l2: &OperatorFamily<T>,
    a0_init: &CVector<T>,
    grids: &[RemainderGrid<T>],
    order: u32,
    n_paths: usize,
    seed: u64,
    gap_tol: T,
    config: &SchemeConfig,
) -> Result<RemainderScaling<T>, ExpansionError>
where
    rand_distr::StandardNormal: rand_distr::Distribution<T>,
{
    assert!(grids.len() >= 2, "need at least two eps points");
    let dim = l1.dim();
    let base_steps = grids[0].steps;
    let mut refine_levels = Vec::with_capacity(grids.len());
    for g in grids {
        let ratio = g.steps / base_steps;
        if g.steps % base_steps != 0 || !ratio.is_power_of_two() {
            return Err(ExpansionError::GridMismatch(format!(
                "step count {} is not a dyadic multiple of the base {}",
                g.steps, base_steps
            )));
        }
        let required = config.steps_per_epsilon as f64 / g.eps.to_f64().unwrap_or(f64::NAN);
        if (g.steps as f64) < required {
            return Err(ExpansionError::Sde(SdeError::GridTooCoarse {
                m: g.steps,
                required,
            }));
        }
        refine_levels.push(ratio.trailing_zeros());
    }

    // Coefficients once, on the fixed coefficient grid.
    let mut initial = vec![CVector::zeros(dim); order as usize + 1];
    initial[0] = a0_init.clone();
    let coeffs = expansion_coefficients(l1, &initial, order, COEFF_GRID_STEPS, gap_tol)?;
    let coeff_dt = coeffs.dt();

    // L2(s) b_n(s) sampled on the coefficient grid.
    let l2b_grids: Vec<Vec<CVector<T>>> = (0..=order as usize)
        .map(|n| {
            (0..=COEFF_GRID_STEPS)
                .map(|i| {
                    let s = fromf::<T>(i as f64) * coeff_dt;
                    l2.eval(s).mul_vec(coeffs.b(n, i))
                })
                .collect()
        })
        .collect();

    let mut mean_delta = vec![Vec::with_capacity(grids.len()); order as usize + 1];
    let mut stderrs = vec![Vec::with_capacity(grids.len()); order as usize + 1];

    for (gi, g) in grids.iter().enumerate() {
        let table = StepTable::build(l1, l2, g.eps, g.steps, config.scheme);
        let interp = CoeffInterps {
            a: (0..=order as usize)
                .map(|n| GridInterp::new(coeffs.a_grid(n), coeff_dt))
                .collect(),
            b: (0..=order as usize)
                .map(|n| GridInterp::new(coeffs.b_grid(n), coeff_dt))
                .collect(),
            l2b: (0..=order as usize)
                .map(|n| GridInterp::new(&l2b_grids[n], coeff_dt))
                .collect(),
        };
        let x0 = coeffs.slow_manifold_start(g.eps);
        let mut ws = Workspace::new(dim);
        let mut sups: Vec<Vec<T>> = vec![Vec::with_capacity(n_paths); order as usize + 1];
        for p in 0..n_paths {
            let path =
                BrownianPath::<T>::sample(base_steps, seed, p as u64).refine_times(refine_levels[gi]);
            let sup = sup_deviation_per_order(
                &table,
                &interp,
                order as usize,
                g.eps,
                &x0,
                &path,
                &mut ws,
            );
            for (n, s) in sup.into_iter().enumerate() {
                sups[n].push(s);
            }
        }
        for n in 0..=order as usize {
            let (mean, se) = mean_stderr(&sups[n]);
            mean_delta[n].push(mean);
            stderrs[n].push(se);
        }
    }

    let eps: Vec<T> = grids.iter().map(|g| g.eps).collect();
    let mut slopes = Vec::with_capacity(order as usize + 1);
    for n in 0..=order as usize {
        slopes.push(convergence_fit(&eps, &mean_delta[n], &stderrs[n])?);
    }
    Ok(RemainderScaling {
        eps,
        mean_delta,
        stderr: stderrs,
        slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::evaluate_expansion;
    use crate::sde::propagate_forward;
    use crate::C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rotating_model() -> (OperatorFamily<f64>, OperatorFamily<f64>) {
        let h = |s: f64| {
            let th = std::f64::consts::PI * s / 4.0;
            let (sin, cos) = (th.sin(), th.cos());
            CMatrix::from_rows(&[
                vec![c(sin * sin, 0.0), c(-sin * cos, 0.0)],
                vec![c(-sin * cos, 0.0), c(cos * cos, 0.0)],
            ])
        };
        let l1 = OperatorFamily::from_fn(2, 5, move |s: f64| {
            let hm = h(s);
            let h2 = hm.mul_mat(&hm);
            hm.scale(c(0.0, -1.0)).axpy(c(-0.5, 0.0), &h2)
        });
        let l2 = OperatorFamily::from_fn(2, 5, move |s: f64| h(s).scale(c(0.0, -1.0)));
        (l1, l2)
    }

    /// The streaming driver must agree with the materialized evaluation
    /// route on a common realization.
    #[test]
    fn streaming_matches_materialized_evaluation() {
        let (l1, l2) = rotating_model();
        let eps = 0.1;
        let m = 2000;
        let a0 = CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let cfg = SchemeConfig::default();
        let coeffs = expansion_coefficients(
            &l1,
            &[a0.clone(), CVector::zeros(2)],
            1,
            m,
            1e-6,
        )
        .unwrap();
        let path = BrownianPath::sample(m, 77, 3);
        let traj = propagate_forward(&l1, &l2, eps, &path, &cfg).unwrap();
        let eval = evaluate_expansion(&coeffs, &l1, &l2, eps, &path, &traj, &cfg).unwrap();
        let x0 = coeffs.slow_manifold_start(eps);

        // Sup deviations via the materialized route.
        let mut sup_ref = [0.0f64; 2];
        for i in 0..=m {
            let xsim = traj.matrix(i).mul_vec(&x0);
            for n in 0..=1usize {
                let d = (&xsim - &eval.truncated(n, i)).norm();
                sup_ref[n] = sup_ref[n].max(d);
            }
        }

        // Streaming route with the coefficients interpolated from their own
        // grid (identity interpolation up to stencil error).
        let table = StepTable::build(&l1, &l2, eps, m, cfg.scheme);
        let l2b: Vec<Vec<CVector<f64>>> = (0..=1)
            .map(|n| {
                (0..=m)
                    .map(|i| l2.eval(i as f64 / m as f64).mul_vec(coeffs.b(n, i)))
                    .collect()
            })
            .collect();
        let interp = CoeffInterps {
            a: (0..=1).map(|n| GridInterp::new(coeffs.a_grid(n), coeffs.dt())).collect(),
            b: (0..=1).map(|n| GridInterp::new(coeffs.b_grid(n), coeffs.dt())).collect(),
            l2b: l2b.iter().map(|g| GridInterp::new(g, coeffs.dt())).collect(),
        };
        let mut ws = Workspace::new(2);
        let sup = sup_deviation_per_order(&table, &interp, 1, eps, &x0, &path, &mut ws);
        for n in 0..=1usize {
            assert!(
                (sup[n] - sup_ref[n]).abs() < 1e-10 * (1.0 + sup_ref[n]),
                "order {n}: {} vs {}",
                sup[n],
                sup_ref[n]
            );
        }
    }

    #[test]
    fn leading_order_slope_half() {
        let (l1, l2) = rotating_model();
        let a0 = CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let grids = [
            RemainderGrid { eps: 0.2, steps: 1024 },
            RemainderGrid { eps: 0.1, steps: 2048 },
            RemainderGrid { eps: 0.05, steps: 4096 },
            RemainderGrid { eps: 0.025, steps: 8192 },
        ];
        let cfg = SchemeConfig::default();
        let study =
            remainder_scaling(&l1, &l2, &a0, &grids, 0, 40, 2025, 1e-6, &cfg).unwrap();
        let slope = study.slopes[0].slope;
        assert!((slope - 0.5).abs() < 0.2, "order-0 slope {slope}");
    }

    #[test]
    fn deterministic_expansion_slope_two() {
        // L2 = 0 at order 1: the deterministic adiabatic expansion has an
        // O(eps^2) error.
        let (l1, _) = rotating_model();
        let l2 = OperatorFamily::zero(2);
        let a0 = CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let grids = [
            RemainderGrid { eps: 0.2, steps: 2048 },
            RemainderGrid { eps: 0.1, steps: 4096 },
            RemainderGrid { eps: 0.05, steps: 8192 },
            RemainderGrid { eps: 0.025, steps: 16384 },
        ];
        let cfg = SchemeConfig::default();
        let study =
            remainder_scaling(&l1, &l2, &a0, &grids, 1, 1, 2026, 1e-6, &cfg).unwrap();
        let slope = study.slopes[1].slope;
        assert!((slope - 2.0).abs() < 0.35, "deterministic slope {slope}");
    }

    #[test]
    fn non_dyadic_grids_rejected() {
        let (l1, l2) = rotating_model();
        let a0 = CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let grids = [
            RemainderGrid { eps: 0.2, steps: 1000 },
            RemainderGrid { eps: 0.1, steps: 3000 },
            RemainderGrid { eps: 0.05, steps: 4000 },
            RemainderGrid { eps: 0.025, steps: 8000 },
        ];
        let cfg = SchemeConfig::default();
        assert!(matches!(
            remainder_scaling(&l1, &l2, &a0, &grids, 1, 2, 1, 1e-6, &cfg),
            Err(ExpansionError::GridMismatch(_))
        ));
    }
}
