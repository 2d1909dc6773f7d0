use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stream {
    Deployment = 0,
    Sources = 1,
    Sinks = 2,
    Energy = 3,
    Jitter = 4,
}

pub(crate) fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
