//! The single source of randomness for k-means seeding, hierarchy shuffling,
//! synthetic data and probe holdout splits.
//!
//! Every stream is a ChaCha8 generator keyed by a `u64` seed through
//! `SeedableRng::seed_from_u64`. The generator name is echoed into reports so
//! that a change of algorithm or crate version is visible in the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name and version of the deterministic generator family.
pub const GENERATOR: &str = "chacha8/rand_chacha-0.9";

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
