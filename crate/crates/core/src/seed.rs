//! Deterministic derivation of independent RNG streams from a master seed.
//!
//! Every random decision in the harness draws from a stream keyed by the
//! master seed plus a purpose tag and indices (client id, round, epoch, item).
//! Streams never depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purpose tags.
pub mod tag {
    pub const COHORT: u64 = 0x01;
    pub const COHORT_NOISE: u64 = 0x02;
    pub const SHIFT: u64 = 0x03;
    pub const TEST_SPLIT: u64 = 0x10;
    pub const VALIDATION_SPLIT: u64 = 0x11;
    pub const REBALANCE_PICK: u64 = 0x20;
    pub const REBALANCE_ITEM: u64 = 0x21;
    pub const INIT: u64 = 0x30;
    pub const SHUFFLE: u64 = 0x31;
    pub const BENCH: u64 = 0x40;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a seed with an ordered list of keys into a new 64-bit seed.
pub fn derive(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn rng(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, keys))
}
