//! Deterministic randomness.
//!
//! Every random draw in the crate (smoothing τ, split shuffles, fold
//! assignment) comes from a [`SeededRng`]: ChaCha8 seeded through
//! `SeedableRng::seed_from_u64`. ChaCha output is specified independently of
//! platform and word size, so a seed pins the sequence everywhere.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One smoothing value τ, uniform on [0, 1).
    pub fn tau(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// `count` smoothing values, in draw order.
    pub fn tau_stream(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.tau()).collect()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
