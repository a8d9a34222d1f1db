//! Content hashing and seed derivation shared by every pipeline stage.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Length (in hex chars) of the short content ids used for snippets, prompts and pairs.
pub const ID_HEX_LEN: usize = 16;

/// Hashes the given fields into a short, stable hex id.
///
/// Fields are length-prefixed so `("ab", "c")` and `("a", "bc")` differ.
pub fn content_id(fields: &[&str]) -> String {
    let digest = hash_fields(fields);
    hex::encode(&digest[..ID_HEX_LEN / 2])
}

/// Full 64-char sha256 hex digest of the given bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_fields(fields: &[&str]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for field in fields {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field.as_bytes());
    }
    hasher.finalize().into()
}

/// Derives an independent per-stage seed from the recorded global seed.
pub fn derive_seed(global: u64, label: &str) -> u64 {
    let digest = hash_fields(&[&global.to_string(), label]);
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Deterministic, platform-independent generator for a seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
