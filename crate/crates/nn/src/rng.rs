//! Seeded, stream-split random source for reproducible initialization,
//! shuffling, and dropout.
//!
//! Built on the ChaCha8 counter-based generator: identical (seed, stream_id,
//! call sequence) produces identical outputs on every platform. Independent
//! concerns should run on distinct streams so inserting draws in one place
//! never perturbs another.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
    stream_id: u64,
}

impl Rng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            inner,
            seed,
            stream_id,
        }
    }

    /// A fresh generator on another stream of the same seed.
    pub fn derive(&self, stream_id: u64) -> Rng {
        Rng::new(self.seed, stream_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller; consumes exactly two draws.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(f64::MIN_POSITIVE);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            items.swap(i, j);
        }
    }

    /// Kaiming-uniform fill: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
    pub fn fill_kaiming_uniform(&mut self, data: &mut [f64], fan_in: usize) {
        let bound = (6.0 / fan_in as f64).sqrt();
        for v in data.iter_mut() {
            *v = self.uniform_in(-bound, bound);
        }
    }
}
