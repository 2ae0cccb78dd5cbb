//! Seed derivation. Every random draw in the crate comes from a ChaCha8
//! stream keyed by a 64-bit seed, and child seeds are derived by hashing so
//! generation order never affects output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a per-sample seed from the global seed and a sample id.
pub fn derive_seed(global_seed: u64, sample_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update(sample_id.as_bytes());
    first_u64(&hasher.finalize())
}

/// Derive an independent stream for one purpose (payload, noise, ...) inside
/// a sample.
pub fn sub_seed(seed: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"sub");
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    first_u64(&hasher.finalize())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn first_u64(digest: &[u8]) -> u64 {
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
