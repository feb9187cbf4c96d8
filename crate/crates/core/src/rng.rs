//! Seeded randomness.
//!
//! Every stream is a SplitMix64 generator (Steele, Lea & Flood; state advances
//! by `0x9E3779B97F4A7C15`, output mixed with the usual two multiply-xorshift
//! rounds). Unit-interval draws take the top 53 bits: `(x >> 11) * 2^-53`.
//! Independent streams are keyed by [`stream_seed`], so work split across
//! threads draws the same numbers as a sequential run.

use rand::RngCore;
use rand::SeedableRng;
pub use rand_xoshiro::SplitMix64;

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Seed for sub-stream `index` of `seed`.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    let mut r = rng(seed ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    r.next_u64()
}

pub fn unit_f64(r: &mut SplitMix64) -> f64 {
    (r.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[-bound, bound)`.
pub fn symmetric(r: &mut SplitMix64, bound: f64) -> f64 {
    (2.0 * unit_f64(r) - 1.0) * bound
}
