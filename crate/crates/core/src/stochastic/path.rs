//! Discretized Brownian paths on a uniform grid of `[0, 1]`, with
//! reproducible counter-based streams and Brownian-bridge refinement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::{fromf, Scalar};

/// A Brownian path sampled on the uniform grid `s_i = i / M`.
///
/// Increments are i.i.d. `Normal(0, 1/M)` drawn from a counter-based
/// (ChaCha) stream keyed by `(seed, stream_id, level)`, so every Monte
/// Carlo path owns an independent stream and resampling is bit-exact.
#[derive(Debug, Clone)]
pub struct BrownianPath<T: Scalar> {
    dt: T,
    increments: Vec<T>,
    cumulative: Vec<T>,
    seed: u64,
    stream_id: u64,
    level: u32,
}

/// Refinement levels tag the high bits of the ChaCha stream counter so the
/// midpoint draws never collide with base-path streams.
const LEVEL_SHIFT: u32 = 48;

fn stream_rng(seed: u64, stream_id: u64, level: u32) -> ChaCha12Rng {
    // SplitMix64 expansion of the seed into a 256-bit ChaCha key.
    let mut key = [0u8; 32];
    let mut x = seed;
    for chunk in key.chunks_exact_mut(8) {
        x = x.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(stream_id ^ ((level as u64) << LEVEL_SHIFT));
    rng
}

impl<T: Scalar> BrownianPath<T>
where
    StandardNormal: Distribution<T>,
{
    /// Sample a fresh path with `m >= 1` steps.
    pub fn sample(m: usize, seed: u64, stream_id: u64) -> Self {
        assert!(m >= 1, "path needs at least one step");
        let dt = T::one() / fromf::<T>(m as f64);
        let sqrt_dt = dt.sqrt();
        let mut rng = stream_rng(seed, stream_id, 0);
        let increments: Vec<T> = (0..m)
            .map(|_| {
                let z: T = rng.sample(StandardNormal);
                z * sqrt_dt
            })
            .collect();
        Self::from_increments(increments, seed, stream_id, 0)
    }

    /// Brownian-bridge midpoint refinement: `M -> 2M` steps on the same
    /// realization. Conditionally on the endpoints, the midpoint of a step
    /// of length `dt` is `(B_l + B_r)/2 + Normal(0, dt/4)`.
    pub fn refine(&self) -> Self {
        let m = self.steps();
        let new_level = self.level + 1;
        let mut rng = stream_rng(self.seed, self.stream_id, new_level);
        let quarter = self.dt * fromf::<T>(0.25);
        let half_sd = quarter.sqrt();
        let mut increments = Vec::with_capacity(2 * m);
        for i in 0..m {
            let z: T = rng.sample(StandardNormal);
            let xi = z * half_sd;
            let half = self.increments[i] * fromf::<T>(0.5);
            increments.push(half + xi);
            increments.push(half - xi);
        }
        Self::from_increments(increments, self.seed, self.stream_id, new_level)
    }

    /// Refine `k` times (each refinement doubles the step count).
    pub fn refine_times(&self, k: u32) -> Self {
        let mut p = self.clone();
        for _ in 0..k {
            p = p.refine();
        }
        p
    }
}

impl<T: Scalar> BrownianPath<T> {
    fn from_increments(increments: Vec<T>, seed: u64, stream_id: u64, level: u32) -> Self {
        let m = increments.len();
        let dt = T::one() / fromf::<T>(m as f64);
        let mut cumulative = Vec::with_capacity(m + 1);
        cumulative.push(T::zero());
        let mut acc = T::zero();
        for &d in &increments {
            acc = acc + d;
            cumulative.push(acc);
        }
        Self {
            dt,
            increments,
            cumulative,
            seed,
            stream_id,
            level,
        }
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Grid point `s_i = i dt`, `i = 0..=M`.
    pub fn grid(&self, i: usize) -> T {
        fromf::<T>(i as f64) * self.dt
    }

    /// Increment over `[s_i, s_{i+1}]`, `i = 0..M`.
    pub fn increment(&self, i: usize) -> T {
        self.increments[i]
    }

    /// Path value `B_{s_i}`, `i = 0..=M`.
    pub fn value(&self, i: usize) -> T {
        self.cumulative[i]
    }

    pub fn terminal(&self) -> T {
        *self.cumulative.last().unwrap()
    }

    pub fn values(&self) -> &[T] {
        &self.cumulative
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn level(&self) -> u32 {
        self.level
    }
}
