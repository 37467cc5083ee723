//! Counter-based random streams: every (seed, run, round) triple gets its own
//! independent ChaCha stream, so results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for round `round` of run `run` under master seed `seed`.
pub fn stream(seed: u64, run: u64, round: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&run.to_le_bytes());
    key[16..24].copy_from_slice(b"declab\0\0");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(round);
    rng
}
