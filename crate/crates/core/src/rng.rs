//! Named random substreams derived from the single scenario seed.
//!
//! Every stochastic component draws from its own ChaCha stream, so adding
//! draws to one component never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Placement = 1,
    Field = 2,
    Fading = 3,
    Noise = 4,
    Training = 5,
    Collection = 6,
    Dataset = 7,
    ModelInit = 8,
}

/// Generator for `stream` at sub-index `index` (e.g. the subframe pair number).
pub fn substream(seed: u64, stream: Stream, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 48) | (index & 0xffff_ffff_ffff));
    rng
}
