use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Named substreams split off one root seed so phases draw from independent
/// streams and can be reordered or parallelized without shifting each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamId {
    Selection = 1,
    Crossover = 2,
    Mutation = 3,
    Operator = 4,
}

pub fn substream(seed: u64, stream: StreamId) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
