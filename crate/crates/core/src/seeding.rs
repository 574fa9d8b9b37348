//! Deterministic seed derivation.
//!
//! Every random stream in a run is keyed by a tuple such as
//! `(root seed, round, client id, purpose)`, so results do not depend on the
//! order in which clients are processed or on the degree of parallelism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

// Stream tags.
pub const TAG_INIT: u64 = 0x11;
pub const TAG_NEGATIVES_VALID: u64 = 0x21;
pub const TAG_NEGATIVES_TEST: u64 = 0x22;
pub const TAG_SYNTHETIC: u64 = 0x31;
pub const TAG_KMEANS: u64 = 0x41;
pub const TAG_SAMPLE: u64 = 0x42;
pub const TAG_TRAIN: u64 = 0x51;
pub const TAG_FINE_TUNE: u64 = 0x52;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes an ordered tuple of integers into a single 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C909, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_for(parts: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(parts))
}
