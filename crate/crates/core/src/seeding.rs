//! Named random streams derived from a single 64-bit seed.
//!
//! Stream `(seed, name, index)` is a ChaCha8 generator keyed by
//! `SHA-256(seed_le || name || 0x00 || index_le)`. The same triple always
//! yields the same stream on every platform, and distinct names or indices
//! give statistically independent streams. The trainer uses `"train"`,
//! evaluation uses `"eval"` with one index per rollout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub const TRAIN: &str = "train";
pub const EVAL: &str = "eval";
pub const ENV: &str = "env";

pub fn stream(seed: u64, name: &str, index: u64) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(name.as_bytes());
    hasher.update([0u8]);
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
