//! Seeded random streams. Every sample index gets its own ChaCha stream so
//! results never depend on the order in which samples are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for sample `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
