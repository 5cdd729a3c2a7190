//! Per-item seed derivation.
//!
//! Every stochastic operation is driven by a seed that is a pure function of
//! the run's global seed and a stable item key, so batch results do not
//! depend on processing order or worker count.
//!
//! The mixing function is SHA-256 over
//! `"physaug.seed.v1\0" || global_seed (u64 LE) || tag (u8) || len (u64 LE) || key`,
//! optionally followed by the sample index (u64 LE); the seed is the first
//! eight digest bytes read little-endian. Tag 0 marks a path key, tag 1 an
//! index key (encoded as u64 LE).

use std::path::{Component, Path};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const DOMAIN: &[u8] = b"physaug.seed.v1\0";

/// Generator used by every sampling routine in the crate.
pub type AugRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> AugRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ItemKey {
    /// Relative path with `/` separators.
    Path(String),
    Index(u64),
}

impl ItemKey {
    /// Canonical key for a path relative to the corpus root.
    pub fn from_relative_path(path: &Path) -> Result<Self> {
        let mut parts = Vec::new();
        for comp in path.components() {
            match comp {
                Component::Normal(s) => parts.push(s.to_string_lossy().into_owned()),
                Component::CurDir => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "item key must be a relative path, got {}",
                        path.display()
                    )))
                }
            }
        }
        Ok(ItemKey::Path(parts.join("/")))
    }
}

impl From<&str> for ItemKey {
    fn from(s: &str) -> Self {
        ItemKey::Path(s.to_owned())
    }
}

impl From<u64> for ItemKey {
    fn from(i: u64) -> Self {
        ItemKey::Index(i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub global_seed: u64,
    pub item_key: ItemKey,
}

impl SeedSpec {
    pub fn new(global_seed: u64, item_key: impl Into<ItemKey>) -> Self {
        Self {
            global_seed,
            item_key: item_key.into(),
        }
    }
}

fn hasher_for(spec: &SeedSpec) -> Result<Sha256> {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(spec.global_seed.to_le_bytes());
    match &spec.item_key {
        ItemKey::Path(p) => {
            if p.is_empty() {
                return Err(Error::invalid("item key must be non-empty"));
            }
            h.update([0u8]);
            h.update((p.len() as u64).to_le_bytes());
            h.update(p.as_bytes());
        }
        ItemKey::Index(i) => {
            h.update([1u8]);
            h.update(8u64.to_le_bytes());
            h.update(i.to_le_bytes());
        }
    }
    Ok(h)
}

fn finish(h: Sha256) -> u64 {
    let digest = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

pub fn derive_item_seed(spec: &SeedSpec) -> Result<u64> {
    Ok(finish(hasher_for(spec)?))
}

/// Seed for the `sample`-th augmentation of one item.
pub fn derive_sample_seed(spec: &SeedSpec, sample: u64) -> Result<u64> {
    let mut h = hasher_for(spec)?;
    h.update(sample.to_le_bytes());
    Ok(finish(h))
}
