//! Seed handling shared by every randomized component.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a base seed with a tag (splitmix64 finalizer) so that independent
/// consumers of one user seed draw from unrelated streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag))
}

/// A generator keyed by `(seed, tag, counter)`; draws for one counter never
/// depend on how many other counters were consumed before it.
pub fn counter_rng(seed: u64, tag: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = rng_for(seed, tag);
    rng.set_stream(counter);
    rng
}

pub(crate) mod tags {
    pub const SPLIT: u64 = 1;
    pub const ENDMEMBERS: u64 = 2;
    pub const FIELDS: u64 = 3;
    pub const GAMMA: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const INIT: u64 = 6;
    pub const DROPOUT: u64 = 7;
    pub const SHUFFLE: u64 = 8;
    pub const AUGMENT: u64 = 9;
    pub const SUBSAMPLE: u64 = 10;
}
