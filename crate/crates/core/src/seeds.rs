//! Deterministic seed derivation.
//!
//! Every random draw in the workspace descends from one user-supplied seed.
//! Independent consumers (arrival sampling, mobility, outcome draws, each
//! swarm invocation, each particle's per-iteration moves) get their own
//! stream so that adding or reordering draws in one consumer never perturbs
//! another. Streams are labeled by a path of integers mixed through
//! splitmix64.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche, standard constants.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and a stream path.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &p in path {
        state = splitmix64(state ^ splitmix64(p));
    }
    state
}

/// Seeded generator for one stream.
pub fn stream_rng(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, path))
}
