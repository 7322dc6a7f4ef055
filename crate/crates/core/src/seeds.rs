//! Deterministic seed derivation.
//!
//! Every random decision in a run traces back to the single `run_seed`
//! through SHA-256. Each derivation site uses a distinct domain label, so
//! streams never collide (the per-trial seed, the per-slot agent seeds, the
//! per-condition sample and bootstrap seeds are all independent).
//!
//! All generators are `ChaCha8Rng`, which is specified independently of
//! platform word size and endianness; equal seeds give equal streams
//! everywhere.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Hash length-prefixed parts down to a 64-bit seed.
///
/// Length prefixes keep distinct part lists from colliding by
/// concatenation (`["ab", "c"]` vs `["a", "bc"]`).
pub fn derive_seed(parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Seed for one trial, independent across conditions and indices.
pub fn trial_seed(run_seed: u64, condition: &str, index: u64) -> u64 {
    derive_seed(&[
        b"trial",
        &run_seed.to_le_bytes(),
        condition.as_bytes(),
        &index.to_le_bytes(),
    ])
}

/// Seed for a condition's review sample.
pub fn sample_seed(run_seed: u64, condition: &str) -> u64 {
    derive_seed(&[b"sample", &run_seed.to_le_bytes(), condition.as_bytes()])
}

/// Seed for one agent slot within a trial (`"m1"` or `"m2"`).
pub fn slot_seed(trial_seed: u64, slot: &str) -> u64 {
    derive_seed(&[b"slot", &trial_seed.to_le_bytes(), slot.as_bytes()])
}

/// Seed for a condition's bootstrap resampling.
pub fn bootstrap_seed(run_seed: u64, condition: &str) -> u64 {
    derive_seed(&[b"bootstrap", &run_seed.to_le_bytes(), condition.as_bytes()])
}

/// The project-wide deterministic generator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
