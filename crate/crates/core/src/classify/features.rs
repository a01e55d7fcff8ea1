use std::collections::BTreeMap;

use twox_hash::XxHash64;

use super::tokenize::TokenSequence;

pub const DEFAULT_DIM: usize = 1 << 18;

/// Joins the two tokens of a bigram before hashing.
const BIGRAM_SEPARATOR: char = '\u{1f}';

/// Sparse, L2-normalized hashed n-gram counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub dim: usize,
    /// `(index, weight)` sorted by index, no zero weights.
    pub entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        FeatureVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, w)| w * dense[i as usize])
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }
}

/// Bucket of a feature string: XXH64 (seed 0) modulo `dim`.
pub fn bucket(feature: &str, dim: usize) -> u32 {
    (XxHash64::oneshot(0, feature.as_bytes()) % dim as u64) as u32
}

/// Unigram and adjacent-bigram counts hashed into `dim` buckets, then scaled
/// to unit L2 norm. Collisions simply add up.
///
/// Panics if `dim` is not a power of two.
pub fn featurize(tokens: &TokenSequence, dim: usize) -> FeatureVector {
    assert!(dim.is_power_of_two(), "feature dimension must be a power of two");
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    let mut bigram = String::new();
    for (i, token) in tokens.tokens.iter().enumerate() {
        *counts.entry(bucket(token, dim)).or_default() += 1.0;
        if let Some(next) = tokens.tokens.get(i + 1) {
            bigram.clear();
            bigram.push_str(token);
            bigram.push(BIGRAM_SEPARATOR);
            bigram.push_str(next);
            *counts.entry(bucket(&bigram, dim)).or_default() += 1.0;
        }
    }
    let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
    let entries = if norm > 0.0 {
        counts.into_iter().map(|(i, c)| (i, c / norm)).collect()
    } else {
        Vec::new()
    };
    FeatureVector { dim, entries }
}
