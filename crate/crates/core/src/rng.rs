//! Seed derivation for reproducible, schedule-independent random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by a
//! `(seed, domain, a, b)` tuple. Work units (replications, bootstrap
//! replicates, rows) pick their own stream, so results do not depend on how
//! rayon schedules them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains keep unrelated consumers of the same seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    ScenarioData = 1,
    ParametricBootstrap = 2,
    NonparametricResample = 3,
    Replication = 4,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and two indices.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    mix64(mix64(mix64(seed) ^ a) ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Generator for stream `(a, b)` of `domain` under `seed`.
///
/// `a` and `b` are packed into the 64-bit ChaCha stream id, so each must fit
/// in 32 bits.
pub fn stream(seed: u64, domain: Domain, a: u64, b: u64) -> ChaCha8Rng {
    debug_assert!(a <= u32::MAX as u64 && b <= u32::MAX as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(domain as u64)));
    rng.set_stream((a << 32) | (b & 0xFFFF_FFFF));
    rng
}
