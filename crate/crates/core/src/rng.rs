//! Named random streams derived from a single run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Labels for the independent random streams of one run.
///
/// Each label selects a distinct ChaCha stream for the same key, so drawing
/// from one stream never shifts another.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    Env = 1,
    ActorNoise = 2,
    MaskCoin = 3,
    Warmup = 4,
    Eval = 5,
    Init = 6,
    Learner = 7,
    Prior = 8,
}

pub fn stream(seed: u64, label: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label as u64);
    rng
}
