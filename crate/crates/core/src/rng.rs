//! Splittable, reproducible random streams.
//!
//! A [`StreamSeed`] names a family of ChaCha8 streams. `rng(k)` opens stream
//! `k` of that family; `derive(label)` mixes a label into the seed to obtain an
//! unrelated family (used for Monte Carlo replications and bootstrap draws).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamSeed(pub u64);

/// Stream used for latent variables of a cohort.
pub const LATENT_STREAM: u64 = 0;
/// Stream used for censoring times, kept apart so that changing the censoring
/// mechanism leaves the latent columns untouched.
pub const CENSORING_STREAM: u64 = 1;

impl StreamSeed {
    pub fn new(seed: u64) -> Self {
        StreamSeed(seed)
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    pub fn derive(&self, label: u64) -> StreamSeed {
        StreamSeed(splitmix64(self.0 ^ splitmix64(label.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
