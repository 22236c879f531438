//! Guarantees every microblog carries a `d`-dimensional feature vector.
//!
//! Precomputed embeddings pass through untouched. Otherwise features are
//! derived from text with signed feature hashing: tokens are lowercased runs
//! of alphanumeric characters, each hashed (SHA-256, seeded) to a bucket and
//! a sign, and the bucket counts are L2-normalized.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::error::{AimError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeaturizerMode {
    Precomputed,
    Hashed,
}

impl std::str::FromStr for FeaturizerMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "precomputed" => Ok(FeaturizerMode::Precomputed),
            "hashed" | "hashed-fallback" => Ok(FeaturizerMode::Hashed),
            other => Err(format!(
                "unknown featurizer {other:?} (expected precomputed or hashed)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizerConfig {
    pub dim: usize,
    pub mode: FeaturizerMode,
    pub seed: u64,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig {
            dim: 50,
            mode: FeaturizerMode::Precomputed,
            seed: 0,
        }
    }
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Signed hashed bag of words, unit L2 norm (or all zeros when `text` has no
/// tokens).
pub fn hash_features(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    assert!(dim > 0, "feature dimension must be positive");
    let mut out = vec![0.0; dim];
    for token in tokenize(text) {
        let digest = Sha256::new()
            .chain_update(seed.to_le_bytes())
            .chain_update(token.as_bytes())
            .finalize();
        let mut bucket = [0u8; 8];
        bucket.copy_from_slice(&digest[..8]);
        let idx = (u64::from_le_bytes(bucket) % dim as u64) as usize;
        let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
        out[idx] += sign;
    }
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        out.iter_mut().for_each(|x| *x /= norm);
    }
    out
}

pub fn featurize_dataset(ds: &Dataset, cfg: &FeaturizerConfig) -> Result<Dataset> {
    if cfg.dim != ds.dim() {
        return Err(AimError::dimension(
            "featurizer dimension",
            ds.dim(),
            cfg.dim,
        ));
    }
    let mut out = ds.clone();
    for event in out.events_mut() {
        let event_id = event.id().to_string();
        for m in event.microblogs_mut() {
            match cfg.mode {
                FeaturizerMode::Precomputed => {
                    if m.features.is_none() {
                        return Err(AimError::validation(format!(
                            "event {event_id}, microblog {}: precomputed mode needs features",
                            m.id
                        )));
                    }
                }
                FeaturizerMode::Hashed => {
                    let text = m.text.as_deref().ok_or_else(|| {
                        AimError::validation(format!(
                            "event {event_id}, microblog {}: hashed mode needs text",
                            m.id
                        ))
                    })?;
                    m.features = Some(hash_features(text, cfg.dim, cfg.seed));
                }
            }
        }
    }
    Ok(out)
}
