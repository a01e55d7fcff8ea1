//! Seeded dataset splits and the labeled training / testing sets built on
//! top of them.
//!
//! Vulnerable records are split 90:10 independently within each primary CWE;
//! non-vulnerable records are split once. Balanced sets then pair vulnerable
//! records with an equal number of non-vulnerable ones drawn without
//! replacement from the matching side's pool. Splits and sets are persisted
//! as id manifests, never as copies of the code.

mod manifest;
mod sets;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{CweId, FunctionRecord};
use crate::error::{Error, Result};
use crate::seed::rng_for;

pub use manifest::Manifest;
pub use sets::{LabeledSet, Rq1Sets, Rq2Sets, SetBuilder, SetKind, Side};

pub const DEFAULT_TRAIN_RATIO: f64 = 0.9;

/// The CWEs studied by default: the five most frequent in the merged data.
pub const DEFAULT_TOP_CWES: [u32; 5] = [125, 787, 119, 20, 416];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_ratio: f64,
    pub seed: u64,
}

impl SplitConfig {
    pub fn new(seed: u64) -> Self {
        SplitConfig {
            train_ratio: DEFAULT_TRAIN_RATIO,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_ratio > 0.0 && self.train_ratio < 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "train_ratio must be in (0,1), got {}",
                self.train_ratio
            )))
        }
    }
}

/// `floor(ratio * n)`, robust to representation error when the product is
/// mathematically an integer (e.g. `0.9 * 1500`).
pub fn train_count(n: usize, ratio: f64) -> usize {
    let exact = ratio * n as f64;
    let nearest = exact.round();
    if (exact - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        exact.floor() as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMetadata {
    pub seed: u64,
    pub corpus_digest: String,
    /// `(train, test)` per primary CWE. Empty for the non-vulnerable split.
    pub per_cwe: BTreeMap<CweId, (usize, usize)>,
    /// Vulnerable records without any CWE; excluded from both sides.
    pub neglected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub name: String,
    /// Corpus order.
    pub train_ids: Vec<String>,
    /// Corpus order.
    pub test_ids: Vec<String>,
    pub metadata: SplitMetadata,
}

impl DatasetSplit {
    pub fn with_corpus_digest(mut self, digest: impl Into<String>) -> Self {
        self.metadata.corpus_digest = digest.into();
        self
    }
}

/// Splits `records` into (train, test) id lists, preserving input order.
/// Records for which `in_train` is `None` land on neither side.
fn partition_in_order(
    records: &[&FunctionRecord],
    in_train: impl Fn(usize) -> Option<bool>,
) -> (Vec<String>, Vec<String>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match in_train(i) {
            Some(true) => train.push(r.id.clone()),
            Some(false) => test.push(r.id.clone()),
            None => {}
        }
    }
    (train, test)
}

/// Splits the vulnerable view per primary CWE. For each CWE the member
/// positions are shuffled with the stream keyed `("stratify", cwe)` and the
/// first `floor(ratio * n)` go to training.
pub fn stratified_split_vulnerable(
    d_v: &[&FunctionRecord],
    cfg: &SplitConfig,
) -> Result<DatasetSplit> {
    cfg.validate()?;
    if let Some(r) = d_v.iter().find(|r| !r.is_vulnerable()) {
        return Err(Error::Config(format!(
            "stratified split expects vulnerable records, got {}",
            r.id
        )));
    }
    let mut groups: BTreeMap<CweId, Vec<usize>> = BTreeMap::new();
    let mut neglected = 0;
    for (i, r) in d_v.iter().enumerate() {
        match r.primary_cwe() {
            Some(cwe) => groups.entry(cwe).or_default().push(i),
            None => neglected += 1,
        }
    }
    // None: neglected (no CWE)
    let mut side: Vec<Option<bool>> = vec![None; d_v.len()];
    let mut per_cwe = BTreeMap::new();
    for (cwe, mut group) in groups {
        let k = train_count(group.len(), cfg.train_ratio);
        let mut rng = rng_for(cfg.seed, "stratify", &cwe.get().to_string());
        group.shuffle(&mut rng);
        per_cwe.insert(cwe, (k, group.len() - k));
        for (rank, &i) in group.iter().enumerate() {
            side[i] = Some(rank < k);
        }
    }
    let (train_ids, test_ids) = partition_in_order(d_v, |i| side[i]);
    Ok(DatasetSplit {
        name: "d_v".into(),
        train_ids,
        test_ids,
        metadata: SplitMetadata {
            seed: cfg.seed,
            corpus_digest: String::new(),
            per_cwe,
            neglected,
        },
    })
}

/// One seeded shuffle of the non-vulnerable view; the first
/// `floor(ratio * n)` go to training.
pub fn split_nonvulnerable(d_nv: &[&FunctionRecord], cfg: &SplitConfig) -> Result<DatasetSplit> {
    cfg.validate()?;
    if let Some(r) = d_nv.iter().find(|r| r.is_vulnerable()) {
        return Err(Error::Config(format!(
            "non-vulnerable split got vulnerable record {}",
            r.id
        )));
    }
    let mut order: Vec<usize> = (0..d_nv.len()).collect();
    order.shuffle(&mut rng_for(cfg.seed, "stratify", "non-vulnerable"));
    let k = train_count(d_nv.len(), cfg.train_ratio);
    let mut in_train = vec![false; d_nv.len()];
    for &i in &order[..k] {
        in_train[i] = true;
    }
    let (train_ids, test_ids) = partition_in_order(d_nv, |i| Some(in_train[i]));
    Ok(DatasetSplit {
        name: "d_nv".into(),
        train_ids,
        test_ids,
        metadata: SplitMetadata {
            seed: cfg.seed,
            ..Default::default()
        },
    })
}
