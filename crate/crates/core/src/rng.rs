//! Seeded random streams.
//!
//! Every random draw goes through ChaCha8 seeded from a `u64`, with one stream
//! id per model component so the draws for `A` do not depend on how many bits
//! were consumed for `B`. Bernoulli trials compare the top 53 bits of a `u64`
//! against `p * 2^53`, which is exact for every `p` in `[0, 1]` and involves
//! no platform-dependent float math.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    FactorA = 1,
    FactorB = 2,
    FactorC = 3,
    Core = 4,
    Noise = 5,
    Reseed = 6,
}

#[derive(Debug, Clone)]
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        SeededRng(rng)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        const SCALE: f64 = (1u64 << 53) as f64;
        let threshold = (p.clamp(0.0, 1.0) * SCALE) as u64;
        (self.0.next_u64() >> 11) < threshold
    }

    /// Uniform index in `0..n` (`n > 0`).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; bias is negligible at the sizes used here.
        ((self.0.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

/// Seed for restart `index` derived from a base seed.
pub fn restart_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
