//! Deterministic random numbers for dataset generation and solver ordering.
//!
//! The generator is SplitMix64: a 64-bit counter advanced by the golden-ratio
//! increment and passed through a fixed avalanche mix. It is small enough to
//! reimplement bit-for-bit in any language, which is the point: the same
//! `(seed, stream)` pair produces the same datasets everywhere.
//!
//! Streams: `SplitMix64::with_stream(seed, stream)` starts from
//! `seed + mix(stream ^ STREAM_SALT)` (wrapping), so distinct streams under one
//! seed are decorrelated while stream 0 is not the same sequence as the bare
//! seed.

use crate::math;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// Stream ids used across the crate, so independent consumers never share
/// a sequence.
pub mod streams {
    pub const GENERATOR_NOISE: u64 = 1;
    pub const GENERATOR_SAMPLING: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const SOLVER: u64 = 4;
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self {
            state: seed.wrapping_add(mix(stream ^ STREAM_SALT)),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`, unbiased (rejection on the short tail).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Standard normal via Box–Muller; consumes exactly two uniforms.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * math::PI * u2)
    }

    /// Fisher–Yates, walking from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
