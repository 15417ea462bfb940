//! Seed derivation.
//!
//! Every random draw belongs to a stream identified by `(master seed, key)`.
//! Streams are PCG-64 (MCG variant) generators seeded with a SplitMix64 mix of
//! the master seed and the key, so a site's draws do not depend on the order in
//! which sites or replications are processed.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

pub type StreamRng = Pcg64Mcg;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output step.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `key` of `seed`.
#[inline]
pub fn split_seed(seed: u64, key: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ key.wrapping_mul(GOLDEN))
}

/// Generator for sub-stream `key` of `seed`.
pub fn stream(seed: u64, key: u64) -> StreamRng {
    StreamRng::seed_from_u64(split_seed(seed, key))
}
