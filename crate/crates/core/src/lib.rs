//! Learning, reasoning and planning for human intention estimation.
//!
//! A trajectory classifier gives a noisy passive estimate, a probabilistic
//! knowledge base turns context into a prior, and a POMDP planner interacts
//! with the person until it is confident enough to report.

#![no_std]

extern crate alloc;

pub mod classifier;
pub mod dataset;
pub mod metrics;
pub mod pipeline;
pub mod planner;
pub mod reasoner;
pub mod simworld;

/// Random source used throughout the crate.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Deterministic generator for `seed`.
pub fn rng_from_seed(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}

/// Mixes `seed` with `stream` into an independent-looking seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over a combined state
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
