//! Counter-based random number generation.
//!
//! Every random draw in this crate is a pure function of an explicit key, so
//! a given quantity (an adjacency entry, a restart seed, a replicate stream)
//! has the same value no matter which thread evaluates it or in what order.

/// SplitMix64 finalizer: a full-avalanche 64-bit mixer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Absorbs `v` into the running key `h`.
#[inline]
pub fn absorb(h: u64, v: u64) -> u64 {
    mix64(h ^ v.wrapping_mul(0xff51_afd7_ed55_8ccd))
}

/// Derives a child seed from a master seed and a path of indices.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = mix64(master);
    for &p in path {
        h = absorb(h, p);
    }
    h
}

/// Maps a 64-bit word to a uniform double in `[0, 1)` using the top 53 bits.
#[inline]
pub fn u64_to_unit_f64(z: u64) -> f64 {
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Keyed per-entry uniform draws: the draw for `(i, j)` depends only on the
/// key and the pair, never on evaluation order.
#[derive(Debug, Clone, Copy)]
pub struct EntryRng {
    key: u64,
}

impl EntryRng {
    pub fn new(master_seed: u64, replicate_index: u64) -> Self {
        Self {
            key: derive_seed(master_seed, &[replicate_index]),
        }
    }

    /// Uniform draw in `[0, 1)` for the unordered pair `(i, j)`.
    #[inline]
    pub fn uniform(&self, i: u32, j: u32) -> f64 {
        let packed = ((i as u64) << 32) | j as u64;
        u64_to_unit_f64(mix64(absorb(self.key, packed)))
    }
}

/// Small sequential stream built on the SplitMix64 finalizer; used where a
/// plain state-advancing generator is the natural fit (seeding heuristics,
/// synthetic test data).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        u64_to_unit_f64(self.next_u64())
    }

    /// Uniform integer in `[0, bound)` by rejection; `bound` must be nonzero.
    pub fn next_below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        let bound = bound as u64;
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % bound) as usize;
            }
        }
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let u1 = if u1 <= 0.0 { f64::MIN_POSITIVE } else { u1 };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
