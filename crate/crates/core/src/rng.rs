//! Seeded generators. Every stochastic operation in the crate draws from a
//! [`ChaCha8Rng`] derived from an explicit seed and a stream id, so results
//! are reproducible across runs and independent of scheduling order.

pub use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Stream ids reserved for the dataset generators and splitters.
pub mod streams {
    pub const LINEAR_SPARSE: u64 = 1;
    pub const FRIEDMAN_POPESCU: u64 = 2;
    pub const KFOLD: u64 = 3;
    pub const TRAIN_TEST: u64 = 4;
    /// Tree `j` of an ensemble uses stream `TREE_BASE + j`.
    pub const TREE_BASE: u64 = 1 << 32;
}

/// Generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a master seed with an index (replication, fold, ...) to get a child
/// seed. SplitMix64 finalizer.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
