//! Seeded random streams.
//!
//! Every stochastic operation draws from ChaCha8 (a counter-based stream
//! cipher generator). A run is identified by one `u64` seed; independent
//! consumers get disjoint ChaCha streams of that seed, so adding draws in
//! one place never shifts the numbers seen elsewhere.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Named ChaCha stream ids.
pub mod stream {
    pub const SPLITS: u64 = 1;
    pub const SYNTHETIC: u64 = 2;
    pub const INIT: u64 = 3;
    pub const TRAIN: u64 = 4;
    pub const GAUGE: u64 = 5;
    pub const VERIFY: u64 = 6;
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-trial generator: `seed ⊕ trial` on the given stream.
pub fn trial_rng(seed: u64, stream: u64, trial: u64) -> ChaCha8Rng {
    rng_for(seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15), stream)
}
