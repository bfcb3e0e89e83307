//! Seed derivation and counter-based random draws.
//!
//! Every random consumer owns a named stream derived from a seed, so adding
//! draws to one model never shifts another model's sequence. Per-cell
//! draws are keyed by `(stream, day, cell)` and are independent of the order
//! in which cells are visited.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a stream name.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a over the name, then mixed with the parent.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(seed ^ mix64(h))
}

/// A seeded sequential generator for one named stream.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, name))
}

/// Uniform draw in `[0, 1)` addressed by `(key, day, cell)`.
#[inline]
pub fn cell_uniform(key: u64, day: u64, cell: u64) -> f64 {
    let z = mix64(key ^ mix64(day.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ mix64(cell)));
    // 53 high bits -> [0, 1)
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
