//! Deterministic, order-independent RNG derivation.
//!
//! Every randomized routine in this crate draws from a stream derived
//! from a master seed and a stable index (sample number, trial number).
//! Streams are independent of evaluation order, so results are identical
//! whether work items run serially or are farmed out to threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for work item `index` under `master_seed`.
///
/// Uses the ChaCha stream parameter, so distinct indices yield
/// non-overlapping streams of the same keyed generator.
pub fn stream_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
