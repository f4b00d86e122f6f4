//! Deterministic random streams.
//!
//! Every stochastic operation takes an explicit `u64` seed. Independent
//! sub-computations (one primitive table, one Monte-Carlo trial, ...) draw
//! from their own ChaCha stream selected by a stream id, so results do not
//! depend on evaluation order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids used by dataset generation. Table and mask streams are offset
/// by the node index.
pub mod streams {
    pub const PRIMITIVE_TABLE: u64 = 0x100;
    pub const SEEN_MASK: u64 = 0x200;
    pub const TRAIN_SAMPLE: u64 = 0x300;
    pub const ID_TEST_SAMPLE: u64 = 0x301;
    pub const OOD_TEST_SAMPLE: u64 = 0x302;
    pub const TRIAL: u64 = 0x1_0000;
}

/// Generator for `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from a parent seed and an index (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
