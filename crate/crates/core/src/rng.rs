//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator (a
//! counter-based stream cipher with a stable, documented output sequence)
//! whose 64-bit seed is derived from the run seed and a list of tags with the
//! SplitMix64 finaliser. Distinct tag lists give decorrelated substreams, so
//! e.g. the two members of a noisy pair, or pair `j` of epoch `e`, never share
//! random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Substream tags. Values are part of the reproducibility contract.
pub mod tag {
    pub const CORRUPT: u64 = 0x01;
    pub const PAIR: u64 = 0x02;
    pub const SURFACE: u64 = 0x03;
    pub const UNIFORM: u64 = 0x04;
    pub const SHUFFLE: u64 = 0x05;
    pub const INIT: u64 = 0x06;
    pub const HELDOUT: u64 = 0x07;
    pub const SINGLE: u64 = 0x08;
    pub const METRICS: u64 = 0x09;
    pub const CLEAN: u64 = 0x0a;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `seed` together with `tags` into a new 64-bit seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

/// Generator for the substream `(seed, tags...)`.
pub fn substream(seed: u64, tags: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, tags))
}
