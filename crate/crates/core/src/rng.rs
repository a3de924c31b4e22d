use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used by every estimator unless overridden.
pub const DEFAULT_SEED: u64 = 0x5EED;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}
