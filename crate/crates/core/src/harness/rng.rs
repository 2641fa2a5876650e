//! Named random streams derived from one master seed.
//!
//! Every consumer of randomness in a run gets its own ChaCha stream, so
//! adding draws to one (say, extra evaluation episodes) never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Episode resets during training (initial layouts and per-episode noise).
    Env,
    /// Network initialization.
    AgentInit,
    /// Warm-up actions and exploration noise.
    Exploration,
    /// Mini-batch sampling and target-smoothing noise.
    Replay,
    /// Evaluation episodes.
    Eval,
}

impl Stream {
    pub const ALL: [Stream; 5] = [
        Stream::Env,
        Stream::AgentInit,
        Stream::Exploration,
        Stream::Replay,
        Stream::Eval,
    ];

    fn id(self) -> u64 {
        match self {
            Stream::Env => 1,
            Stream::AgentInit => 2,
            Stream::Exploration => 3,
            Stream::Replay => 4,
            Stream::Eval => 5,
        }
    }
}

pub fn stream_rng(master_seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream.id());
    rng
}
