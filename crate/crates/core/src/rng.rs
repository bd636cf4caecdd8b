//! Seed splitting.
//!
//! Every random component draws from its own ChaCha stream keyed by the run
//! seed, so subcomponents stay reproducible independently of each other and of
//! how many threads evaluate candidates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers for the pipeline's random consumers.
pub mod stream {
    pub const SAMPLER: u64 = 1 << 32;
    pub const TREE: u64 = 2 << 32;
    pub const GENERATOR: u64 = 3 << 32;
    pub const CHECKS: u64 = 4 << 32;
}

/// Deterministic generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform index in `0..n` that does not depend on the platform's pointer width.
pub(crate) fn index_below<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.random_range(0..n as u64) as usize
}
