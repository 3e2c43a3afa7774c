//! Seed splitting: one ChaCha8 key per experiment seed, one stream per replica.
//!
//! `(seed, replica)` maps to `ChaCha8Rng::seed_from_u64(seed)` with its stream
//! set to `replica`, so every replica draws from an independent, reproducible
//! substream regardless of which worker runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReplicaSeed {
    pub seed: u64,
    pub replica: u64,
}

impl ReplicaSeed {
    pub fn new(seed: u64, replica: u64) -> Self {
        Self { seed, replica }
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.replica);
        rng
    }
}
