//! Seed-splitting scheme.
//!
//! Every stochastic operation in the crate draws from a ChaCha8 stream
//! derived from one user-supplied 64-bit seed. Each consumer gets its own
//! fixed stream id, so adding draws to one module never perturbs another,
//! and a run is reproducible from the single seed alone.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids, one per randomness consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// MinHash permutation seeds in near-duplicate removal.
    Dedup = 1,
    /// Bucket and record draws in batch sampling.
    Sampler = 2,
    /// Synthetic-task construction (teachers, validation set).
    Task = 3,
    /// Training minibatch draws in the simulator.
    SimTrain = 4,
    /// Held-aside eval batch draws in the simulator.
    SimEval = 5,
    /// Trajectory sampling in the Monte Carlo unbiasedness check.
    Mc = 6,
    /// Start vectors and batch draws in stability probes.
    Probe = 7,
}

/// Deterministic RNG for `stream`, derived from the root `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
