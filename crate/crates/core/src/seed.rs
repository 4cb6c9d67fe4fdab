//! Stable seed derivation. Every seeded draw in the crate goes through here
//! so that results depend only on `(seed, key)` and never on iteration order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive(seed: u64, key: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(seed: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, key))
}

/// A uniform value in `[0, 1)` fixed by `(seed, key)`.
pub fn unit(seed: u64, key: &str) -> f64 {
    (derive(seed, key) >> 11) as f64 / (1u64 << 53) as f64
}
