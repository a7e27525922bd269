//! Random number streams.
//!
//! Every simulator draws from [`SimRng`]. Independent jobs derived from one
//! master seed use distinct ChaCha stream ids, so job `i` sees the same
//! numbers no matter how many workers run or in which order jobs finish.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Recorded in manifests.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64, stream = job index)";

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for job `job` under master seed `seed`.
pub fn job_stream(seed: u64, job: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(job);
    rng
}
