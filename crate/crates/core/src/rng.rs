//! Seeded randomness.
//!
//! Every stochastic step draws from a `ChaCha8Rng`, whose output stream is
//! fixed by its seed on every platform. Child seeds are derived from a master
//! seed and a stream index with SplitMix64 so runs, documents and queries each
//! get an independent, reproducible generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DrlRng = ChaCha8Rng;

/// Stream index reserved for projecting the query within a run.
pub const QUERY_STREAM: u64 = u64::MAX;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives the seed of child stream `stream` from `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master) ^ stream.rotate_left(17) ^ 0xD1B5_4A32_D192_ED03)
}

pub fn rng_from_seed(seed: u64) -> DrlRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// FNV-1a over the bytes of `key`; used to give each document a seed that
/// depends on its id rather than its position.
pub fn stable_hash(key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
