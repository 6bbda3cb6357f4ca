//! Deterministic seed derivation.
//!
//! Every stochastic stage (weight init, epoch shuffling, corruption, mechanism
//! sampling, per-record optimizer restarts) consumes a seed derived from one
//! master seed through [`mix`]. Because derivation is a pure function of
//! `(master, stream)`, outputs are identical regardless of execution order or
//! worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives a child seed from `(seed, stream)` with a splitmix64 finalizer.
///
/// The stream index is spread by the 64-bit golden ratio before mixing so that
/// consecutive stream values land far apart in seed space.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the crate-wide RNG from a derived seed.
///
/// ChaCha8 is used everywhere so that streams are stable across platforms and
/// releases of this crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
