//! Seeded random streams.
//!
//! Every stochastic routine draws from an [`RngStream`]. The generator is
//! ChaCha8 (from `rand_chacha`) seeded through `SeedableRng::seed_from_u64`,
//! which is specified bit-for-bit and independent of platform endianness or
//! pointer width. Equal seeds give equal draw sequences everywhere.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name recorded alongside seeds in run outputs.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64";

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }

    /// Independent child stream for trial `index`, used when fanning trials
    /// out to worker threads.
    pub fn derive(seed: u64, index: u64) -> Self {
        // splitmix64 finaliser keeps nearby (seed, index) pairs decorrelated
        let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Self::new(z ^ (z >> 31))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Runs `trial(index, stream)` for `index in 0..trials` on the rayon pool,
/// each with `RngStream::derive(seed, index)`. Results come back in index
/// order regardless of scheduling.
pub fn par_trials<T, F>(seed: u64, trials: usize, trial: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, RngStream) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..trials)
        .into_par_iter()
        .map(|k| trial(k, RngStream::derive(seed, k as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seeds_give_equal_streams() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..10_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    const PINNED_SEED0_FIRST: u64 = 13_080_132_717_333_068_652;

    #[test]
    fn par_trials_are_ordered_and_reproducible() {
        let a = par_trials(7, 64, |k, mut r| (k, r.next_u64()));
        let b = par_trials(7, 64, |k, mut r| (k, r.next_u64()));
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, (k, _))| i == *k));
    }

    #[test]
    fn first_draw_is_pinned() {
        // guards against a silent generator swap
        let mut a = RngStream::new(0);
        assert_eq!(a.next_u64(), PINNED_SEED0_FIRST);
        assert_ne!(RngStream::derive(1, 0).seed(), RngStream::derive(1, 1).seed());
    }
}
