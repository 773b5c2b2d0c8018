//! Seeded random-number streams.
//!
//! Every stochastic draw in the toolkit flows from one ChaCha generator per
//! run seed, split into fixed stream ids. Modules can therefore never perturb
//! each other's draws, and identical seeds give bit-identical results on any
//! platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-slot service-rate draws during policy evaluation.
pub const STREAM_SERVICE: u64 = 1;
/// Per-slot service-rate draws during Q-learning training (out of sample
/// with respect to evaluation).
pub const STREAM_TRAINING_SERVICE: u64 = 2;
/// Epsilon-greedy exploration draws.
pub const STREAM_EXPLORATION: u64 = 3;
/// Frame-slotted ALOHA activity and slot-choice draws.
pub const STREAM_ALOHA: u64 = 4;

/// A generator for the given (seed, stream) pair.
pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
