//! Seeded random number generation.
//!
//! Every stochastic component draws from [`Rng`], a xoshiro256** generator
//! whose state is expanded from a 64-bit seed with splitmix64. Streams for
//! independent components are derived with [`Rng::fork`] so that adding a
//! draw in one component never shifts another.

use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone)]
pub struct Rng {
    inner: Xoshiro256StarStar,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        // `seed_from_u64` runs splitmix64 over the seed to fill the 256-bit state.
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    /// Derive an independent child stream keyed by `stream`.
    pub fn fork(&mut self, stream: u64) -> Rng {
        let base: u64 = self.inner.gen();
        Rng::new(base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.gen::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.inner.gen::<f64>() < p
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen()
    }
}
