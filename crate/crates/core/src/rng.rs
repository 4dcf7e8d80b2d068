//! Reproducible random streams.
//!
//! Run `i` of an ensemble seeded with `s` uses the xoshiro256++ generator
//! seeded from `s` and advanced by `i` jumps of 2¹²⁸ draws, so streams never
//! overlap and a run's output does not depend on how runs are scheduled.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..index {
        rng.jump();
    }
    rng
}
