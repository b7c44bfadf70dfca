//! The single seeded random source of the toolkit.
//!
//! Generator: SplitMix64 (Steele, Lea & Flood), state advanced by the Weyl
//! increment `0x9e3779b97f4a7c15` and finalized by the variant-13 mixer. The
//! seed is used as the initial state. Reference vector for seed `1234567`:
//!
//! ```text
//! 6457827717110365317, 3203168211198807973, 9817491932198370423,
//! 4593380528125082431, 16408922859458223821
//! ```
//!
//! Bounded draws use rejection sampling (below), and sampling without
//! replacement is a partial Fisher-Yates shuffle, so any implementation of
//! these three steps reproduces the same selections.

use alloc::vec::Vec;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

/// Seeded SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: SplitMix64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::from_seed(seed.to_le_bytes()),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw from `0..bound`: reject raw values below
    /// `2^64 mod bound`, then reduce modulo `bound`.
    ///
    /// # Panics
    /// If `bound` is zero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    /// `k` distinct indices from `0..n`, returned in ascending order.
    ///
    /// Partial Fisher-Yates: for `i in 0..k`, swap position `i` with
    /// `i + below(n - i)`; the first `k` positions are the sample.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n}");
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx.sort_unstable();
        idx
    }
}
