//! Time-dependent operator families `s -> A(s)` on the slow-time interval
//! `[0, 1]`, with analytic or finite-difference derivative access.

use std::sync::Arc;

use super::matrix::CMatrix;
use crate::scalar::{fromf, Scalar};

type EvalFn<T> = Arc<dyn Fn(T) -> CMatrix<T> + Send + Sync>;

/// Default central-difference step for derivative evaluation; near the
/// `f64` optimum `eps^(1/3)`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Clone)]
enum Derivative<T: Scalar> {
    Analytic(EvalFn<T>),
    CentralDifference { h: T },
}

/// A `C^k` family of complex matrices on `[0, 1]`.
#[derive(Clone)]
pub struct OperatorFamily<T: Scalar> {
    dim: usize,
    smoothness_order: u32,
    eval: EvalFn<T>,
    deriv: Derivative<T>,
}

impl<T: Scalar> OperatorFamily<T> {
    /// Family from an evaluator closure; derivatives by central differences.
    pub fn from_fn(
        dim: usize,
        smoothness_order: u32,
        f: impl Fn(T) -> CMatrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            smoothness_order,
            eval: Arc::new(f),
            deriv: Derivative::CentralDifference {
                h: fromf(DEFAULT_FD_STEP),
            },
        }
    }

    /// Family with an analytic derivative closure.
    pub fn with_derivative(
        dim: usize,
        smoothness_order: u32,
        f: impl Fn(T) -> CMatrix<T> + Send + Sync + 'static,
        df: impl Fn(T) -> CMatrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            smoothness_order,
            eval: Arc::new(f),
            deriv: Derivative::Analytic(Arc::new(df)),
        }
    }

    /// Constant family; derivative identically zero.
    pub fn constant(a: CMatrix<T>) -> Self {
        let dim = a.dim();
        let zero = CMatrix::zeros(dim);
        Self {
            dim,
            smoothness_order: u32::MAX,
            eval: Arc::new(move |_| a.clone()),
            deriv: Derivative::Analytic(Arc::new(move |_| zero.clone())),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(CMatrix::zeros(dim))
    }

    /// Override the finite-difference step.
    pub fn with_fd_step(mut self, h: T) -> Self {
        self.deriv = Derivative::CentralDifference { h };
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smoothness_order(&self) -> u32 {
        self.smoothness_order
    }

    pub fn eval(&self, s: T) -> CMatrix<T> {
        (self.eval)(s)
    }

    /// Derivative at `s`; second-order one-sided stencils keep the
    /// evaluation inside `[0, 1]` near the endpoints.
    pub fn deriv(&self, s: T) -> CMatrix<T> {
        match &self.deriv {
            Derivative::Analytic(df) => df(s),
            Derivative::CentralDifference { h } => {
                let h = *h;
                let two_h = h + h;
                let inv = T::one() / two_h;
                if s - h < T::zero() {
                    // (-3 f(s) + 4 f(s+h) - f(s+2h)) / (2h)
                    let f0 = self.eval(s).scale_re(fromf::<T>(-3.0));
                    let f1 = self.eval(s + h).scale_re(fromf::<T>(4.0));
                    let f2 = self.eval(s + two_h);
                    (&(&f0 + &f1) - &f2).scale_re(inv)
                } else if s + h > T::one() {
                    let f0 = self.eval(s).scale_re(fromf::<T>(3.0));
                    let f1 = self.eval(s - h).scale_re(fromf::<T>(-4.0));
                    let f2 = self.eval(s - two_h);
                    (&(&f0 + &f1) + &f2).scale_re(inv)
                } else {
                    (&self.eval(s + h) - &self.eval(s - h)).scale_re(inv)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn fd_derivative_matches_analytic() {
        let fam = OperatorFamily::<f64>::from_fn(1, 3, |s| {
            CMatrix::diag(&[Complex::new((2.0 * s).sin(), s * s)])
        });
        for &s in &[0.0, 0.3, 0.5, 1.0] {
            let d = fam.deriv(s)[(0, 0)];
            let exact = Complex::new(2.0 * (2.0 * s).cos(), 2.0 * s);
            assert!((d - exact).norm() < 1e-8, "s={s}: {d} vs {exact}");
        }
    }

    #[test]
    fn constant_family_has_zero_derivative() {
        let fam = OperatorFamily::<f64>::constant(CMatrix::identity(3));
        assert_eq!(fam.deriv(0.5), CMatrix::zeros(3));
        assert_eq!(fam.eval(0.1), CMatrix::identity(3));
    }
}
