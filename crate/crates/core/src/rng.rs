//! Seed derivation for independent, reproducible random streams.
//!
//! Every stream in the crate (design construction, training sets, test sets,
//! Monte-Carlo draws) is addressed by a root seed plus a path of integers, so
//! replicates never share a stream and any cell can be regenerated alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every random stream.
pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mix a root seed with a path of stream identifiers.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(root), |acc, &k| {
        splitmix64(acc ^ splitmix64(k.wrapping_add(0x632B_E59B_D9B4_E019)))
    })
}

/// Generator for the stream addressed by `(root, path)`.
pub fn stream(root: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(root, path))
}

/// Well-known stream tags, kept in one place so paths never collide.
pub mod tags {
    pub const DESIGN: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const TEST: u64 = 3;
    pub const MONTE_CARLO: u64 = 4;
    pub const HISTOGRAM: u64 = 5;
}
