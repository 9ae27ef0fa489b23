//! Seed derivation for independent, reproducible RNG streams.
//!
//! Every random decision in the toolkit draws from a stream keyed by the
//! top-level seed, a label naming the stage, and an ordinal. Streams never
//! depend on execution order, so results are identical under any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Derive a 256-bit ChaCha seed from `(seed, label, index)`.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    hasher.finalize().into()
}

pub fn stream(seed: u64, label: &str, index: u64) -> StreamRng {
    ChaCha8Rng::from_seed(derive_seed(seed, label, index))
}
