//! Seed derivation for the reproducible random streams used across the crate.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche for cheap seed mixing.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a tag path
/// (e.g. subset index, channel id). Order of tags matters.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix(base);
    for &t in tags {
        s = splitmix(s ^ splitmix(t));
    }
    s
}

/// Counter-based deterministic generator keyed by the derived seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
