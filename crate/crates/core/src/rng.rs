//! Counter-based random streams.
//!
//! Every stochastic step in the simulator draws from a [`SeedStream`]
//! keyed by a path of tags (device, chunk, repeat, pair, ...). Draws are a
//! pure function of the key and a counter, so results do not depend on the
//! order in which parallel workers consume them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes two words into one with full avalanche.
#[inline]
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix(a ^ splitmix(b.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// A keyed random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedStream(pub u64);

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream(mix(seed, 0x5EED))
    }

    /// Derives an independent child stream.
    #[inline]
    pub fn fork(self, tag: u64) -> Self {
        SeedStream(mix(self.0, tag))
    }

    /// Uniform draw in `[0, 1)` at position `counter`.
    #[inline]
    pub fn unit(self, counter: u64) -> f64 {
        (mix(self.0, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A sequential generator for steps that need one (sampling without
    /// replacement, pattern fuzzing).
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Named tags so stream paths read as intent rather than magic numbers.
pub mod tag {
    pub const FIELD: u64 = 1;
    pub const DIRECTION: u64 = 2;
    pub const RESEAT: u64 = 3;
    pub const DEVICE: u64 = 4;
    pub const ALLOCATION: u64 = 5;
    pub const SWEEP: u64 = 6;
    pub const PAIR: u64 = 7;
    pub const SECONDARY: u64 = 8;
    pub const SESSION: u64 = 9;
    pub const FUZZ: u64 = 10;
    pub const TRIAL: u64 = 11;
    pub const ORACLE: u64 = 12;
    pub const CHUNK: u64 = 13;
    pub const MONTE_CARLO: u64 = 14;
}
