//! Deterministic seed derivation.
//!
//! Every random draw in the crate flows from a single master seed. Child
//! seeds are derived with a SplitMix64-style counter so that records and
//! stages stay independent of each other and of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for item `index` of stream `stream` under `master`.
pub fn derive(master: u64, stream: u64, index: u64) -> u64 {
    let s = mix(master.wrapping_add(GOLDEN.wrapping_mul(stream.wrapping_add(1))));
    mix(s.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Well-known stream identifiers.
pub mod stream {
    pub const TRAIN_BASELINE: u64 = 1;
    pub const TEST_BASELINE: u64 = 2;
    pub const TEST_DAMAGED: u64 = 3;
    pub const JITTER: u64 = 4;
    pub const ICA_INIT: u64 = 10;
    pub const CAE_INIT: u64 = 11;
    pub const CAE_SHUFFLE: u64 = 12;
    pub const REPEAT: u64 = 20;
}
