//! Seeded random streams.
//!
//! Every stochastic step draws from a ChaCha8 stream keyed by the run seed and
//! a stream id, so a stage can be replayed in isolation and independent
//! workers never share a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

/// Stream ids keep the stages of one run statistically independent.
pub mod stream {
    pub const KNN: u64 = 1;
    pub const INIT: u64 = 2;
    pub const SGD: u64 = 3;
    pub const KMEANS: u64 = 4;
    pub const NOISE: u64 = 5;
}

pub fn stage_rng(seed: u64, stream: u64) -> StageRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for one unit of parallel work; `word` selects the block position
/// so chunk `c` of epoch `e` always sees the same numbers.
pub fn worker_rng(seed: u64, stream: u64, epoch: u64, chunk: u64) -> StageRng {
    let mut rng = stage_rng(seed ^ epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15), stream);
    rng.set_word_pos(u128::from(chunk) << 32);
    rng
}
