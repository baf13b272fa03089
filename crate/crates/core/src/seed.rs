//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! seeded from a base seed and a small tuple of stream coordinates, so
//! parallel work produces the same numbers as sequential work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a base seed with stream coordinates into an independent seed.
pub fn derive(base: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(base), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn rng(base: u64, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, coords))
}

/// Stream labels, so that different consumers of one base seed never share
/// a stream.
pub mod stream {
    pub const WALK_ORDER: u64 = 1;
    pub const WALK: u64 = 2;
    pub const INIT: u64 = 3;
    pub const SKIPGRAM: u64 = 4;
    pub const LINE: u64 = 5;
    pub const ANCHORS: u64 = 6;
    pub const FOREST: u64 = 7;
    pub const TREE: u64 = 8;
    pub const VERSION: u64 = 9;
}
