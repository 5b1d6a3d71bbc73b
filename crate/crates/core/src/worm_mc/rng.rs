use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in every estimate's provenance.
pub const RNG_NAME: &str = "ChaCha8";

/// Counter-based generator for chain `stream` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
