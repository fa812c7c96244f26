//! Real scalar abstraction for the numerical kernels.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type the laboratory is generic over.
///
/// `f64` is the production type; `f32` is supported for cheap smoke runs.
/// Tolerance defaults quoted throughout the crate assume `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand conversion from an `f64` literal into the generic scalar.
#[inline]
pub fn fromf<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant must convert into the scalar type")
}

/// Pairwise (tree) summation. Deterministic for a fixed input order and
/// numerically stabler than a running sum on long Monte Carlo reductions.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Mean and standard error of the mean via pairwise sums.
pub fn mean_stderr<T: Scalar>(xs: &[T]) -> (T, T) {
    let n = fromf::<T>(xs.len() as f64);
    if xs.is_empty() {
        return (T::zero(), T::zero());
    }
    let mean = pairwise_sum(xs) / n;
    if xs.len() == 1 {
        return (mean, T::zero());
    }
    let sq: Vec<T> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - T::one());
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn mean_stderr_constant() {
        let xs = vec![2.0f64; 50];
        let (m, se) = mean_stderr(&xs);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }
}
