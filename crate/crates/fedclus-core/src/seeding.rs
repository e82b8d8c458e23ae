//! Deterministic seed derivation and RNG construction.
//!
//! Every random choice in the crate flows from an explicit 64-bit seed
//! through a ChaCha stream, so results are identical across platforms and
//! across serial/concurrent execution schedules.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; the standard avalanche mix for spreading seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed for the given stream (client index,
/// server phase, grid cell, ...) from a base seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    base ^ splitmix64(stream)
}

/// Two-level derivation for (phase, index) style streams.
pub fn derive_seed2(base: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(base, a), b)
}

/// The crate-wide RNG. ChaCha keeps the stream portable and reproducible.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
