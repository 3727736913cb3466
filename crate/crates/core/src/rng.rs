//! Seeded random streams.
//!
//! Every random choice in a session comes from a [`SimRng`]. A session owns
//! several independent streams derived from one 64-bit seed so that, for
//! example, changing the adversary does not perturb Trent's choices.

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Named stream identifiers within one seeded session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Trent = 1,
    Measurement = 2,
    Adversary = 3,
}

/// Deterministic pseudorandom stream with an explicit seed.
///
/// Backed by ChaCha8, whose output is specified independently of platform
/// word size and endianness.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn stream(seed: u64, stream: Stream) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream as u64);
        Self { inner }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn bit(&mut self) -> bool {
        self.inner.gen::<bool>()
    }

    /// Uniform index in `0..n`. `n` must be non-zero.
    pub fn index(&mut self, n: usize) -> usize {
        Uniform::new(0u64, n as u64).sample(&mut self.inner) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    /// `k` distinct indices from `0..n`, returned ascending.
    pub fn choose_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut picked = rand::seq::index::sample(&mut self.inner, n, k).into_vec();
        picked.sort_unstable();
        picked
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let mut a = SimRng::new(42);
        let mut b = SimRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
        assert_eq!(a.choose_indices(50, 10), b.choose_indices(50, 10));
    }

    #[test]
    fn streams_are_independent() {
        let mut a = SimRng::stream(7, Stream::Trent);
        let mut b = SimRng::stream(7, Stream::Measurement);
        let xs: Vec<u64> = (0..8).map(|_| a.uniform().to_bits()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.uniform().to_bits()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn chosen_indices_are_distinct_and_sorted() {
        let mut rng = SimRng::new(3);
        let idx = rng.choose_indices(100, 25);
        assert_eq!(idx.len(), 25);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(idx.iter().all(|&i| i < 100));
    }
}
