//! Deterministic random streams. Every randomised operation takes an explicit
//! stream so that a whole election replays from its seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha20Rng;

pub fn seeded_rng(seed: &[u8]) -> Rng {
    ChaCha20Rng::from_seed(Sha256::digest(seed).into())
}

/// Derives an independent stream for a labelled sub-task.
pub fn derive_rng(parent_seed: &[u8], label: &str, index: u64) -> Rng {
    let mut hasher = Sha256::new();
    hasher.update((parent_seed.len() as u64).to_be_bytes());
    hasher.update(parent_seed);
    hasher.update((label.len() as u64).to_be_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_be_bytes());
    ChaCha20Rng::from_seed(hasher.finalize().into())
}
