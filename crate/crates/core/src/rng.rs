//! Seeded random streams.
//!
//! Independent runs derive their generator from a base seed by adding the run
//! index (`base + index`, wrapping). Every simulation takes an explicit seed
//! and owns its generator, so results never depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for the `index`-th independent run under `base`.
pub fn derived_rng(base: u64, index: u64) -> SimRng {
    rng_from_seed(base.wrapping_add(index))
}
