//! Reproducible RNG streams.
//!
//! All randomness flows through ChaCha8, a counter-based generator whose
//! 64-bit stream field splits one master seed into independent streams: one
//! per simulation run plus dedicated streams for initial sampling and for
//! the tuple estimator. Parallel runs therefore never share state and the
//! output is identical regardless of how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream namespaces carved out of the 64-bit stream id.
const EVENTS_NS: u64 = 0;
const INIT_NS: u64 = 1 << 56;
const ESTIMATOR_NS: u64 = 2 << 56;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Event clock and jump decisions of one run.
pub fn events_stream(seed: u64, run: usize) -> ChaCha8Rng {
    stream(seed, EVENTS_NS | run as u64)
}

/// Initial-condition draws of one run.
pub fn init_stream(seed: u64, run: usize) -> ChaCha8Rng {
    stream(seed, INIT_NS | run as u64)
}

/// Tuple draws of the empirical coefficient estimator, split per snapshot
/// and per run.
pub fn estimator_stream(seed: u64, snapshot: usize, run: usize) -> ChaCha8Rng {
    stream(seed, ESTIMATOR_NS | ((snapshot as u64) << 32) | run as u64)
}
