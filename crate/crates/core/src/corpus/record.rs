use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::sha256_hex;

/// A CWE identifier, e.g. `CWE-125` is `CweId(125)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct CweId(u32);

impl CweId {
    pub fn new(value: u32) -> Result<Self> {
        if value == 0 {
            return Err(Error::InvalidCwe(value.to_string()));
        }
        Ok(CweId(value))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for CweId {
    type Error = Error;

    fn try_from(value: u32) -> Result<Self> {
        CweId::new(value)
    }
}

impl From<CweId> for u32 {
    fn from(id: CweId) -> u32 {
        id.0
    }
}

impl FromStr for CweId {
    type Err = Error;

    /// Accepts `"CWE-125"`, `"cwe-125"` and `"125"`.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let digits = match trimmed.get(..4) {
            Some(prefix) if prefix.eq_ignore_ascii_case("cwe-") => &trimmed[4..],
            _ => trimmed,
        };
        digits
            .parse::<u32>()
            .ok()
            .and_then(|v| CweId::new(v).ok())
            .ok_or_else(|| Error::InvalidCwe(s.to_string()))
    }
}

impl fmt::Display for CweId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CWE-{}", self.0)
    }
}

/// Binary ground truth. Serialized as `1` (vulnerable) / `0` (non-vulnerable).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    NonVulnerable,
    Vulnerable,
}

impl Label {
    pub fn is_vulnerable(self) -> bool {
        self == Label::Vulnerable
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::NonVulnerable => 0,
            Label::Vulnerable => 1,
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Label::NonVulnerable),
            1 => Ok(Label::Vulnerable),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.as_u8()
    }
}

/// One source-code function. Field order here is the canonical JSONL order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub id: String,
    pub code: String,
    pub label: Label,
    #[serde(default)]
    pub cwes: Vec<CweId>,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
}

impl FunctionRecord {
    /// The CWE used for splitting and class labels: the first listed one.
    pub fn primary_cwe(&self) -> Option<CweId> {
        self.cwes.first().copied()
    }

    /// Length in Unicode scalar values of the raw (un-normalized) code.
    pub fn char_len(&self) -> usize {
        self.code.chars().count()
    }

    pub fn is_vulnerable(&self) -> bool {
        self.label.is_vulnerable()
    }
}

/// Where a block of records came from and what ingestion had to skip.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDescriptor {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub records: usize,
    /// 1-based line numbers of malformed lines.
    #[serde(default)]
    pub skipped_lines: Vec<usize>,
    /// CWE tokens that could not be parsed as `CWE-<n>` and were dropped.
    #[serde(default)]
    pub unparsed_cwes: usize,
    /// Non-vulnerable records that arrived with CWE tags (cleared on ingest).
    #[serde(default)]
    pub cleared_cwes: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<FunctionRecord>,
    pub provenance: Vec<SourceDescriptor>,
}

impl Corpus {
    pub fn new(records: Vec<FunctionRecord>, provenance: Vec<SourceDescriptor>) -> Self {
        Corpus {
            records,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The `d_v` view: vulnerable records in corpus order.
    pub fn vulnerable(&self) -> Vec<&FunctionRecord> {
        self.records.iter().filter(|r| r.is_vulnerable()).collect()
    }

    /// The `d_nv` view.
    pub fn non_vulnerable(&self) -> Vec<&FunctionRecord> {
        self.records.iter().filter(|r| !r.is_vulnerable()).collect()
    }

    pub fn index(&self) -> CorpusIndex<'_> {
        CorpusIndex::new(self)
    }

    /// Canonical JSONL: one record per line, fields in canonical order,
    /// absent optionals omitted.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("records always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::write(path, e))?;
        file.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::write(path, e))
    }

    /// SHA-256 of the canonical JSONL; identifies the corpus in manifests.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_jsonl().as_bytes())
    }

    /// Vulnerable/fixed pairs as `(vulnerable id, benign id)`, ordered by the
    /// position of the vulnerable record. Pair groups that do not contain
    /// exactly one record of each label are ignored.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut groups: HashMap<&str, (Vec<usize>, Vec<usize>)> = HashMap::new();
        for (i, r) in self.records.iter().enumerate() {
            if let Some(pair) = r.pair_id.as_deref() {
                let entry = groups.entry(pair).or_default();
                if r.is_vulnerable() {
                    entry.0.push(i);
                } else {
                    entry.1.push(i);
                }
            }
        }
        let mut pairs: Vec<(usize, usize)> = groups
            .into_values()
            .filter(|(v, b)| v.len() == 1 && b.len() == 1)
            .map(|(v, b)| (v[0], b[0]))
            .collect();
        pairs.sort_unstable();
        pairs
            .into_iter()
            .map(|(v, b)| (self.records[v].id.clone(), self.records[b].id.clone()))
            .collect()
    }
}

/// Id lookup over a borrowed corpus.
#[derive(Debug)]
pub struct CorpusIndex<'a> {
    by_id: HashMap<&'a str, &'a FunctionRecord>,
}

impl<'a> CorpusIndex<'a> {
    pub fn new(corpus: &'a Corpus) -> Self {
        CorpusIndex {
            by_id: corpus.records.iter().map(|r| (r.id.as_str(), r)).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&'a FunctionRecord> {
        self.by_id.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    /// Resolves every id or fails listing the ones that are missing.
    pub fn resolve<'i, I>(&self, ids: I, what: &str) -> Result<Vec<&'a FunctionRecord>>
    where
        I: IntoIterator<Item = &'i str>,
    {
        let mut found = Vec::new();
        let mut missing = Vec::new();
        for id in ids {
            match self.get(id) {
                Some(r) => found.push(r),
                None => missing.push(id.to_string()),
            }
        }
        if missing.is_empty() {
            Ok(found)
        } else {
            Err(Error::UnknownIds {
                what: what.to_string(),
                ids: missing,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cwe_parsing() {
        assert_eq!("CWE-125".parse::<CweId>().unwrap().get(), 125);
        assert_eq!("cwe-20".parse::<CweId>().unwrap().get(), 20);
        assert_eq!(" 787 ".parse::<CweId>().unwrap().get(), 787);
        assert!("CWE-0".parse::<CweId>().is_err());
        assert!("NVD-CWE-Other".parse::<CweId>().is_err());
        assert!("CWE-".parse::<CweId>().is_err());
        assert_eq!(CweId::new(416).unwrap().to_string(), "CWE-416");
    }

    #[test]
    fn canonical_field_order_and_omitted_optionals() {
        let r = FunctionRecord {
            id: "dv:0".into(),
            code: "int f(){}".into(),
            label: Label::Vulnerable,
            cwes: vec![CweId::new(125).unwrap()],
            source: "dv".into(),
            project: Some("p".into()),
            commit: None,
            pair_id: None,
        };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"id":"dv:0","code":"int f(){}","label":1,"cwes":[125],"source":"dv","project":"p"}"#
        );
    }

    #[test]
    fn pairs_require_one_of_each_label() {
        let mk = |id: &str, label, pair: Option<&str>| FunctionRecord {
            id: id.into(),
            code: id.into(),
            label,
            cwes: if label == Label::Vulnerable { vec![CweId(20)] } else { vec![] },
            source: "t".into(),
            project: None,
            commit: None,
            pair_id: pair.map(String::from),
        };
        let corpus = Corpus::new(
            vec![
                mk("b1", Label::NonVulnerable, Some("p1")),
                mk("v1", Label::Vulnerable, Some("p1")),
                mk("v2", Label::Vulnerable, Some("p2")),
                mk("v3", Label::Vulnerable, Some("p3")),
                mk("v4", Label::Vulnerable, Some("p3")),
            ],
            vec![],
        );
        assert_eq!(corpus.pairs(), vec![("v1".to_string(), "b1".to_string())]);
    }
}
