//! Dephasing models: commuting Hermitian families `H(s)`, `Gamma(s)` and
//! the dynamical-phase gauge shift.

use num_complex::Complex;

use super::DephasingError;
use crate::linalg::{eigh, CMatrix, CVector, OperatorFamily};
use crate::scalar::{fromf, Scalar};

/// Hermiticity tolerance for the model families.
const HERMITIAN_TOL: f64 = 1e-10;

/// Validation sample count along `[0, 1]`.
const VALIDATION_SAMPLES: usize = 65;

/// A driven dephasing model: Hermitian `H(s)` and `Gamma(s)` that commute
/// at equal times, so `ker L1(s)` consists of joint eigenvectors and is
/// contained in `ker L2(s)` after the gauge shift.
#[derive(Clone)]
pub struct DephasingModel<T: Scalar> {
    h: OperatorFamily<T>,
    gamma: OperatorFamily<T>,
    commutation_tol: T,
}

impl<T: Scalar> DephasingModel<T> {
    /// Build and validate a model on a fixed sample grid.
    pub fn new(
        h: OperatorFamily<T>,
        gamma: OperatorFamily<T>,
        commutation_tol: T,
    ) -> Result<Self, DephasingError> {
        assert_eq!(h.dim(), gamma.dim(), "families must share the dimension");
        let model = Self {
            h,
            gamma,
            commutation_tol,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), DephasingError> {
        let herm_tol = fromf::<T>(HERMITIAN_TOL);
        for k in 0..VALIDATION_SAMPLES {
            let s = fromf::<T>(k as f64 / (VALIDATION_SAMPLES - 1) as f64);
            let hm = self.h.eval(s);
            let gm = self.gamma.eval(s);
            for (m, name) in [(&hm, "H"), (&gm, "Gamma")] {
                let defect = (m - &m.adjoint()).frobenius_norm();
                if defect > herm_tol * m.frobenius_norm().max(T::one()) {
                    let _ = name;
                    return Err(DephasingError::NotHermitian {
                        s: s.to_f64().unwrap_or(f64::NAN),
                        defect: defect.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
            let comm = (&hm.mul_mat(&gm) - &gm.mul_mat(&hm)).frobenius_norm();
            if comm > self.commutation_tol {
                return Err(DephasingError::NotCommuting {
                    s: s.to_f64().unwrap_or(f64::NAN),
                    norm: comm.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn h_family(&self) -> &OperatorFamily<T> {
        &self.h
    }

    pub fn gamma_family(&self) -> &OperatorFamily<T> {
        &self.gamma
    }

    pub fn commutation_tol(&self) -> T {
        self.commutation_tol
    }

    /// `L1(s) = -(iH(s) + Gamma(s)^2 / 2)`.
    pub fn l1_family(&self) -> OperatorFamily<T> {
        let h = self.h.clone();
        let g = self.gamma.clone();
        let dim = self.dim();
        OperatorFamily::from_fn(dim, h.smoothness_order().min(g.smoothness_order()), move |s| {
            let hm = h.eval(s);
            let gm = g.eval(s);
            let g2 = gm.mul_mat(&gm);
            hm.scale(Complex::new(T::zero(), -T::one()))
                .axpy(Complex::new(fromf::<T>(-0.5), T::zero()), &g2)
        })
    }

    /// `L2(s) = -i Gamma(s)`.
    pub fn l2_family(&self) -> OperatorFamily<T> {
        let g = self.gamma.clone();
        let dim = self.dim();
        OperatorFamily::from_fn(dim, g.smoothness_order(), move |s| {
            g.eval(s).scale(Complex::new(T::zero(), -T::one()))
        })
    }

    /// The default two-level test model: a frame rotating by
    /// `theta(s) = pi s / 4` with excited-level data `E1 = gamma1 = 1` and
    /// ground-level data identically zero.
    pub fn rotating(e1: f64, gamma1: f64) -> Self {
        let basis = |s: T| {
            let th = fromf::<T>(std::f64::consts::PI / 4.0) * s;
            (th.cos(), th.sin())
        };
        let proj1 = move |s: T| {
            let (cos, sin) = basis(s);
            // |psi1><psi1| with psi1 = (-sin, cos)
            CMatrix::from_fn(2, |i, j| {
                let v = [-sin, cos];
                Complex::new(v[i] * v[j], T::zero())
            })
        };
        let e1t = fromf::<T>(e1);
        let g1t = fromf::<T>(gamma1);
        let h = OperatorFamily::from_fn(2, u32::MAX, move |s| proj1(s).scale_re(e1t));
        let gamma = OperatorFamily::from_fn(2, u32::MAX, move |s| proj1(s).scale_re(g1t));
        Self::new(h, gamma, fromf(1e-10)).expect("built-in model is valid")
    }

    /// The default three-level test model: levels `(E, gamma)` of
    /// `(0,0), (1,1), (2.5, 0.6)` in a frame with two independent rotation
    /// angles, chosen so all levels stay well gapped.
    pub fn three_level() -> Self {
        let frame = |s: T| three_level_frame(s);
        let diag_h = [0.0, 1.0, 2.5];
        let diag_g = [0.0, 1.0, 0.6];
        let h = OperatorFamily::from_fn(3, u32::MAX, move |s| {
            conjugated_diagonal(&frame(s), &diag_h)
        });
        let gamma = OperatorFamily::from_fn(3, u32::MAX, move |s| {
            conjugated_diagonal(&frame(s), &diag_g)
        });
        Self::new(h, gamma, fromf(1e-10)).expect("built-in model is valid")
    }
}

/// Orthogonal frame `R(s) = R_{02}(phi) R_{01}(theta)` with
/// `theta = pi s / 4`, `phi = pi s / 5`: both excited levels are driven
/// directly out of the ground state and not into each other, which keeps
/// their tunneling channels decoupled.
fn three_level_frame<T: Scalar>(s: T) -> CMatrix<T> {
    let th = fromf::<T>(std::f64::consts::PI / 4.0) * s;
    let ph = fromf::<T>(std::f64::consts::PI / 5.0) * s;
    let (ct, st) = (th.cos(), th.sin());
    let (cp, sp) = (ph.cos(), ph.sin());
    let r01 = [
        [ct, -st, T::zero()],
        [st, ct, T::zero()],
        [T::zero(), T::zero(), T::one()],
    ];
    let r02 = [
        [cp, T::zero(), -sp],
        [T::zero(), T::one(), T::zero()],
        [sp, T::zero(), cp],
    ];
    CMatrix::from_fn(3, |i, j| {
        let mut acc = T::zero();
        for k in 0..3 {
            acc = acc + r02[i][k] * r01[k][j];
        }
        Complex::new(acc, T::zero())
    })
}

fn conjugated_diagonal<T: Scalar>(r: &CMatrix<T>, diag: &[f64]) -> CMatrix<T> {
    let d = CMatrix::diag(
        &diag
            .iter()
            .map(|&x| Complex::new(fromf::<T>(x), T::zero()))
            .collect::<Vec<_>>(),
    );
    r.mul_mat(&d).mul_mat(&r.adjoint())
}

/// Subtract the dynamical phase of level `k`: `H -> H - E_k(s)`,
/// `Gamma -> Gamma - sqrt(gamma_k)(s)`, which shifts solutions by the pure
/// phase `exp(+(i/eps) int E_k + (i/sqrt(eps)) int sqrt(gamma_k) dB)`.
///
/// Levels are identified by ascending energy order, which is consistent
/// along `[0, 1]` when levels do not cross.
pub fn gauge_subtract<T: Scalar>(
    model: &DephasingModel<T>,
    level: usize,
) -> Result<DephasingModel<T>, DephasingError> {
    let dim = model.dim();
    if level >= dim {
        return Err(DephasingError::LevelOutOfRange { level, dim });
    }
    let level_data = move |h: &OperatorFamily<T>, g: &OperatorFamily<T>, s: T| -> (T, T) {
        let (vals, vecs) = eigh(&h.eval(s)).expect("validated Hermitian family");
        let e = vals[level];
        let v: &CVector<T> = &vecs[level];
        let gv = g.eval(s).mul_vec(v);
        let gamma_sqrt = v.dot(&gv).re;
        (e, gamma_sqrt)
    };

    let (h0, g0) = (model.h.clone(), model.gamma.clone());
    let tol = model.commutation_tol();
    let h_shifted = OperatorFamily::from_fn(dim, model.h.smoothness_order(), move |s| {
        let (e, _) = level_data(&h0, &g0, s);
        let mut m = h0.eval(s);
        for i in 0..dim {
            m[(i, i)] = m[(i, i)] - Complex::new(e, T::zero());
        }
        m
    });
    let (h2, g2) = (model.h.clone(), model.gamma.clone());
    let gamma_shifted = OperatorFamily::from_fn(dim, model.gamma.smoothness_order(), move |s| {
        let (_, gs) = level_data(&h2, &g2, s);
        let mut m = g2.eval(s);
        for i in 0..dim {
            m[(i, i)] = m[(i, i)] - Complex::new(gs, T::zero());
        }
        m
    });
    DephasingModel::new(h_shifted, gamma_shifted, tol)
}
