//! Counter-based, splittable random streams.
//!
//! Every stream is a ChaCha8 keystream addressed by `(key, stream id)`, so
//! walk `i` of a study always consumes the same random numbers regardless of
//! which worker runs it or in what order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// SplitMix64 finalizer, used to derive independent keys from `(seed, tag)`.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child key from a parent key and a tag.
pub fn derive_key(key: u64, tag: u64) -> u64 {
    mix64(key ^ mix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(key: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(key);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Uniform in the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        loop {
            let u = (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform direction on the unit sphere of `R^d`.
    pub fn direction(&mut self, d: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| self.normal()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-300 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }

    /// Uniform point in the ball `B(0, radius)` of `R^d`.
    pub fn in_ball(&mut self, d: usize, radius: f64) -> Vec<f64> {
        let s = radius * self.open01().powf(1.0 / d as f64);
        self.direction(d).into_iter().map(|x| x * s).collect()
    }
}
