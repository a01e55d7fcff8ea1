use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetSplit, SplitMetadata};
use crate::corpus::CweId;
use crate::error::{Error, Result};
use crate::seed::sha256_hex;

/// On-disk description of a split or labeled set: ids, labels and counts,
/// never code.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub seed: u64,
    pub corpus_digest: String,
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub labels: BTreeMap<String, u32>,
    pub counts: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::write(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

fn cwe_key(cwe: CweId, side: &str) -> String {
    format!("{cwe}.{side}")
}

impl DatasetSplit {
    /// `label` is the value recorded for every id (1 for the vulnerable split,
    /// 0 for the non-vulnerable one).
    pub fn to_manifest(&self, label: u32) -> Manifest {
        let mut counts = BTreeMap::from([
            ("train".to_string(), self.train_ids.len()),
            ("test".to_string(), self.test_ids.len()),
            ("neglected".to_string(), self.metadata.neglected),
        ]);
        for (&cwe, &(tr, te)) in &self.metadata.per_cwe {
            counts.insert(cwe_key(cwe, "train"), tr);
            counts.insert(cwe_key(cwe, "test"), te);
        }
        Manifest {
            name: self.name.clone(),
            seed: self.metadata.seed,
            corpus_digest: self.metadata.corpus_digest.clone(),
            labels: self
                .train_ids
                .iter()
                .chain(&self.test_ids)
                .map(|id| (id.clone(), label))
                .collect(),
            train: self.train_ids.clone(),
            test: self.test_ids.clone(),
            counts,
            notes: BTreeMap::new(),
        }
    }

    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        let mut per_cwe: BTreeMap<CweId, (usize, usize)> = BTreeMap::new();
        for (key, &n) in &m.counts {
            if let Some((cwe, side)) = key.split_once('.') {
                let cwe: CweId = cwe.parse()?;
                let entry = per_cwe.entry(cwe).or_default();
                match side {
                    "train" => entry.0 = n,
                    "test" => entry.1 = n,
                    other => {
                        return Err(Error::Config(format!("unknown count key side {other:?}")))
                    }
                }
            }
        }
        Ok(DatasetSplit {
            name: m.name.clone(),
            train_ids: m.train.clone(),
            test_ids: m.test.clone(),
            metadata: SplitMetadata {
                seed: m.seed,
                corpus_digest: m.corpus_digest.clone(),
                per_cwe,
                neglected: m.counts.get("neglected").copied().unwrap_or(0),
            },
        })
    }
}
