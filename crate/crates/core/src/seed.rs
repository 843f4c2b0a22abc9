//! Seed derivation.
//!
//! A single user-facing seed drives several independent random processes
//! (design draw, noise draw, subsampling repetitions, fold shuffling).
//! Feeding the same raw seed to all of them would make their streams
//! collide, so every consumer derives its own seed by mixing the base
//! seed with a domain tag.

/// Domain tags. Values are arbitrary but must stay distinct.
pub(crate) mod domain {
    pub const DESIGN: u64 = 0x01;
    pub const WEIGHTS: u64 = 0x02;
    pub const NOISE: u64 = 0x03;
    pub const STABILITY: u64 = 0x04;
    pub const FOLDS: u64 = 0x05;
    pub const SWEEP_CV: u64 = 0x06;
    pub const SWEEP_EVAL: u64 = 0x07;
    pub const METHOD_FIT: u64 = 0x08;
    pub const ABLATION_DATA: u64 = 0x09;
    pub const ABLATION_FIT: u64 = 0x0a;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `seed` with a sequence of tags into a new 64-bit seed.
///
/// The same `(seed, tags)` pair always yields the same output, and any
/// change to the seed, a tag value, or the tag order changes it.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    let mut state = seed;
    let mut out = splitmix64(&mut state);
    for &tag in tags {
        state ^= tag;
        out = splitmix64(&mut state);
    }
    out
}
