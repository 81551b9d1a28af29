//! Seeded randomness.
//!
//! All stochastic code draws from a counter-based ChaCha8 stream through the
//! helpers here, so a `(seed, tag)` pair reproduces the same values on every
//! platform. Gaussians come from Box-Muller rather than a library sampler to
//! keep generated datasets bit-identical across versions.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Stream of reproducible random values.
pub struct Stream {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mix a master seed with a stage tag, so distinct pipeline stages consume
/// independent streams and adding draws to one stage cannot perturb another.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut h = splitmix64(master ^ 0x51_7c_c1_b7_27_22_0a_95);
    for b in tag.as_bytes() {
        h = splitmix64(h ^ u64::from(*b));
    }
    h
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream { rng: ChaCha8Rng::seed_from_u64(seed), spare_normal: None }
    }

    /// Stream for a named stage under a master seed.
    pub fn for_stage(master: u64, tag: &str) -> Self {
        Stream::new(derive_seed(master, tag))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn uniform_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform<T: Scalar>(&mut self, lo: T, hi: T) -> T {
        lo + (hi - lo) * T::from_f64_lossy(self.uniform_f64())
    }

    /// Unbiased-enough index in `0..n` (Lemire multiply-shift; bias < n/2^64).
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be nonempty");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal via Box-Muller; caches the second value of each pair.
    pub fn standard_normal<T: Scalar>(&mut self) -> T {
        if let Some(z) = self.spare_normal.take() {
            return T::from_f64_lossy(z);
        }
        // u in (0,1] so the log is finite
        let u = 1.0 - self.uniform_f64();
        let v = self.uniform_f64();
        let radius = (-2.0 * u.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * v;
        self.spare_normal = Some(radius * angle.sin());
        T::from_f64_lossy(radius * angle.cos())
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.index(i + 1);
            xs.swap(i, j);
        }
    }

    /// Sample `k` distinct indices from `0..n` without replacement.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx.truncate(k);
        idx.sort_unstable();
        idx
    }

    /// Sample an index proportionally to nonnegative weights. Returns `None`
    /// when the total weight is not positive.
    pub fn weighted_index<T: Scalar>(&mut self, weights: &[T]) -> Option<usize> {
        let total: T = weights.iter().fold(T::zero(), |a, &w| a + w);
        if !(total > T::zero()) {
            return None;
        }
        let mut target = total * T::from_f64_lossy(self.uniform_f64());
        for (i, &w) in weights.iter().enumerate() {
            if target < w {
                return Some(i);
            }
            target = target - w;
        }
        // only reachable through rounding at the upper edge
        weights.iter().rposition(|&w| w > T::zero())
    }
}
