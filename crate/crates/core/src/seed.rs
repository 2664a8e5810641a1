//! Independent RNG streams carved out of one trial seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const INSTANCE: u64 = 0;
pub const INIT: u64 = 1;
pub const ROUTING: u64 = 2;
pub const ORDER: u64 = 3;
/// per-cover dynamics streams start here (`DYNAMICS + alpha`)
pub const DYNAMICS: u64 = 16;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
