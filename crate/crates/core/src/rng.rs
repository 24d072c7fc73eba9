//! Seed-stream helpers.
//!
//! Every parallel sampler splits its work into fixed-size chunks and gives
//! chunk `k` the ChaCha stream `k` of the user seed, so output does not
//! depend on the number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Rows per independently seeded chunk.
pub const CHUNK: usize = 1024;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Derives a child seed from a parent seed and a label, e.g. a repeat index.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
