//! Deterministic random number generation.
//!
//! All randomness in this crate flows through [`SplitMix64`], a counter-based
//! generator with a fixed output function. Combined with the named sub-seed
//! derivation in [`SeedMix`], this makes every pipeline stage reproducible
//! bit-for-bit across runs and platforms, and independent of how loop
//! iterations are scheduled: each (portion, rep), tree, or simulated device
//! gets its own derived stream instead of sharing mutable generator state.

use alloc::vec::Vec;

/// Weyl-sequence increment used by the SplitMix64 counter.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a fixed bijective mix of a 64-bit word.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based pseudo-random generator (SplitMix64).
///
/// The state advances by [`GOLDEN_GAMMA`] per draw and the output is
/// `mix64(state)`, so the stream is a pure function of `(seed, draw index)`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform integer in `[0, bound)` via the multiply-shift method.
    ///
    /// Bias is below `bound / 2^64`, negligible for the bounds used here,
    /// and the method consumes exactly one draw regardless of the bound.
    pub fn bounded(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Uniform `f64` in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform `f64` in `(0, 1]`; safe as a logarithm argument.
    fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform `f64` in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal deviate via the Box–Muller transform.
    ///
    /// Consumes exactly two draws per call.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_open01();
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }

    /// In-place Fisher–Yates shuffle, high index downward.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.bounded(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// First `take` elements of a random permutation of `0..n`
    /// (sampling without replacement), in ascending order.
    pub fn sample_indices(&mut self, n: usize, take: usize) -> Vec<usize> {
        debug_assert!(take <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..take {
            let j = i + self.bounded((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(take);
        pool.sort_unstable();
        pool
    }
}

/// Builder for named sub-stream seeds.
///
/// `SeedMix::new(seed).text("tree").word(t).finish()` folds a domain tag and
/// indices into a fresh 64-bit seed through repeated [`mix64`] rounds. The
/// derivation is order-sensitive and includes string lengths, so distinct
/// (tag, parts) tuples map to distinct streams for all practical purposes.
#[derive(Debug, Clone)]
pub struct SeedMix {
    h: u64,
}

impl SeedMix {
    pub fn new(seed: u64) -> Self {
        Self {
            h: mix64(seed ^ GOLDEN_GAMMA),
        }
    }

    pub fn word(mut self, w: u64) -> Self {
        self.h = mix64(self.h ^ w);
        self
    }

    /// Folds a string as length word followed by little-endian 8-byte chunks.
    pub fn text(mut self, s: &str) -> Self {
        self = self.word(s.len() as u64);
        for chunk in s.as_bytes().chunks(8) {
            let mut w = [0u8; 8];
            w[..chunk.len()].copy_from_slice(chunk);
            self = self.word(u64::from_le_bytes(w));
        }
        self
    }

    pub fn finish(self) -> u64 {
        mix64(self.h)
    }

    pub fn into_rng(self) -> SplitMix64 {
        SplitMix64::new(self.finish())
    }
}
