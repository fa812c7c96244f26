//! Grid-indexed integrand processes with declared adaptation.
//!
//! Adaptation is semantic (it states which sigma algebra the producer used)
//! and cannot be inferred numerically, so it is a tag that the integrators
//! enforce.

use std::marker::PhantomData;

use num_complex::Complex;

use crate::linalg::{CMatrix, CVector};
use crate::scalar::Scalar;

/// Declared adaptation of a grid process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adaptation {
    /// Non-anticipatory: `X_i` depends on increments up to `s_i`.
    Forward,
    /// Anticipatory: `Y_i` depends on increments from `s_i` on.
    Backward,
    /// Deterministic or otherwise valid for both integrals.
    TwoSided,
}

impl Adaptation {
    pub fn as_str(self) -> &'static str {
        match self {
            Adaptation::Forward => "forward",
            Adaptation::Backward => "backward",
            Adaptation::TwoSided => "two-sided",
        }
    }
}

/// Values an Ito sum can accumulate: closed under addition, real scaling
/// and equipped with a norm.
pub trait LinearValue<T: Scalar>: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn scale_re(&self, t: T) -> Self;
    fn norm(&self) -> T;

    fn norm_sqr(&self) -> T {
        let n = self.norm();
        n * n
    }
}

impl<T: Scalar> LinearValue<T> for T {
    fn zero_like(&self) -> Self {
        T::zero()
    }
    fn add(&self, other: &Self) -> Self {
        *self + *other
    }
    fn scale_re(&self, t: T) -> Self {
        *self * t
    }
    fn norm(&self) -> T {
        self.abs()
    }
    fn norm_sqr(&self) -> T {
        *self * *self
    }
}

impl<T: Scalar> LinearValue<T> for Complex<T> {
    fn zero_like(&self) -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn scale_re(&self, t: T) -> Self {
        self.scale(t)
    }
    fn norm(&self) -> T {
        Complex::norm(*self)
    }
    fn norm_sqr(&self) -> T {
        Complex::norm_sqr(self)
    }
}

impl<T: Scalar> LinearValue<T> for CVector<T> {
    fn zero_like(&self) -> Self {
        CVector::zeros(self.len())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn scale_re(&self, t: T) -> Self {
        CVector::scale_re(self, t)
    }
    fn norm(&self) -> T {
        CVector::norm(self)
    }
    fn norm_sqr(&self) -> T {
        CVector::norm_sqr(self)
    }
}

impl<T: Scalar> LinearValue<T> for CMatrix<T> {
    fn zero_like(&self) -> Self {
        CMatrix::zeros(self.dim())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn scale_re(&self, t: T) -> Self {
        CMatrix::scale_re(self, t)
    }
    fn norm(&self) -> T {
        self.frobenius_norm()
    }
}

/// A process sampled on the path grid: `M + 1` values at `s_i = i / M`.
#[derive(Debug, Clone)]
pub struct GridProcess<T: Scalar, V: LinearValue<T>> {
    values: Vec<V>,
    adaptation: Adaptation,
    _scalar: PhantomData<T>,
}

impl<T: Scalar, V: LinearValue<T>> GridProcess<T, V> {
    pub fn new(values: Vec<V>, adaptation: Adaptation) -> Self {
        Self {
            values,
            adaptation,
            _scalar: PhantomData,
        }
    }

    /// Deterministic process sampled from a function of slow time; tagged
    /// two-sided.
    pub fn deterministic(m: usize, f: impl Fn(T) -> V) -> Self {
        let dt = T::one() / crate::scalar::fromf::<T>(m as f64);
        let values = (0..=m)
            .map(|i| f(crate::scalar::fromf::<T>(i as f64) * dt))
            .collect();
        Self::new(values, Adaptation::TwoSided)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn adaptation(&self) -> Adaptation {
        self.adaptation
    }

    pub fn value(&self, i: usize) -> &V {
        &self.values[i]
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }
}
