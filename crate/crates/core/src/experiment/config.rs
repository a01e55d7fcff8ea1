use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::Hyperparameters;
use crate::corpus::{CweId, FieldSchema, SyntheticSpec};
use crate::error::{Error, Result};
use crate::eval::EvalMode;
use crate::preprocess::DEFAULT_MAX_LEN;
use crate::seed::sha256_hex;
use crate::split::{DEFAULT_TOP_CWES, DEFAULT_TRAIN_RATIO};

/// One input corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub path: PathBuf,
    /// Source tag; also the id prefix.
    pub source: String,
    /// `diversevul` (default) or `canonical`.
    #[serde(default)]
    pub schema: Option<String>,
    /// Explicit field mapping; wins over `schema`.
    #[serde(default)]
    pub fields: Option<FieldSchema>,
}

impl InputSpec {
    pub fn field_schema(&self) -> Result<FieldSchema> {
        if let Some(f) = &self.fields {
            return Ok(f.clone());
        }
        match self.schema.as_deref() {
            None | Some("diversevul") => Ok(FieldSchema::default()),
            Some("canonical") => Ok(FieldSchema::canonical()),
            Some(other) => Err(Error::Config(format!("unknown input schema {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    /// CWE id (as text, e.g. "125") → vulnerable count.
    pub counts: BTreeMap<String, usize>,
    pub non_vulnerable: usize,
    pub pair_fraction: f64,
    pub pad_min: usize,
    pub pad_max: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            counts: DEFAULT_TOP_CWES.iter().map(|c| (c.to_string(), 200)).collect(),
            non_vulnerable: 2000,
            pair_fraction: 0.25,
            pad_min: 0,
            pad_max: 4,
        }
    }
}

impl SyntheticConfig {
    pub fn spec(&self, seed: u64) -> Result<SyntheticSpec> {
        let mut counts = Vec::with_capacity(self.counts.len());
        for (k, n) in &self.counts {
            let cwe: CweId = k.parse()?;
            counts.push((cwe.get(), *n));
        }
        if self.pad_min > self.pad_max {
            return Err(Error::Config("synthetic.pad_min exceeds synthetic.pad_max".into()));
        }
        if !(0.0..=1.0).contains(&self.pair_fraction) {
            return Err(Error::Config("synthetic.pair_fraction must be in [0, 1]".into()));
        }
        let mut spec = SyntheticSpec::new(&counts, self.non_vulnerable, seed)?.with_pair_fraction(self.pair_fraction);
        spec.pad_lines = (self.pad_min, self.pad_max);
        Ok(spec)
    }
}

/// Everything one run depends on. Every key can be overridden with
/// `key=value` (dotted paths for nested tables).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub inputs: Vec<InputSpec>,
    /// Used when `inputs` is empty.
    pub synthetic: Option<SyntheticConfig>,
    pub train_ratio: f64,
    pub max_len: usize,
    /// CWEs that get their own classifier in the CWE-specific comparison.
    pub cwes: Vec<u32>,
    /// Classes of the multiclass model (besides 0).
    pub top_cwes: Vec<u32>,
    /// FPR tolerance for the result grids.
    pub r: f64,
    /// FPR tolerance for the pairwise report.
    pub pairwise_r: f64,
    pub modes: Vec<EvalMode>,
    /// Treat a configured CWE without samples as empty instead of failing.
    pub allow_empty_cwe: bool,
    pub classifier: Hyperparameters,
    /// Optional external predictions evaluated alongside the built-in models.
    pub external_predictions: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            inputs: Vec::new(),
            synthetic: None,
            train_ratio: DEFAULT_TRAIN_RATIO,
            max_len: DEFAULT_MAX_LEN,
            cwes: DEFAULT_TOP_CWES.to_vec(),
            top_cwes: DEFAULT_TOP_CWES.to_vec(),
            r: 0.2,
            pairwise_r: 0.005,
            modes: vec![EvalMode::Hard, EvalMode::Score],
            allow_empty_cwe: false,
            classifier: Hyperparameters::default(),
            external_predictions: None,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        // Relative input paths are relative to the config file.
        if let Some(dir) = path.parent() {
            for input in &mut cfg.inputs {
                if input.path.is_relative() {
                    input.path = dir.join(&input.path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `key=value` overrides. Values are parsed as TOML (so `0.1`,
    /// `[125, 787]` and `true` work) and fall back to plain strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut root = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
            let value = parse_value(raw.trim());
            set_path(&mut root, key.trim(), value)?;
        }
        let text = toml::to_string(&root).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_toml(&text)
    }

    /// The checks that matter for splitting an existing corpus.
    pub fn validate_split(&self) -> Result<()> {
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::Config("train_ratio must be in (0, 1)".into()));
        }
        for c in self.cwes.iter().chain(&self.top_cwes) {
            CweId::new(*c)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.r) || !(0.0..1.0).contains(&self.pairwise_r) {
            return Err(Error::Config("r and pairwise_r must be in [0, 1)".into()));
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::Config("train_ratio must be in (0, 1)".into()));
        }
        if self.inputs.is_empty() && self.synthetic.is_none() {
            return Err(Error::Config("no inputs and no synthetic corpus configured".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("modes must not be empty".into()));
        }
        for c in self.cwes.iter().chain(&self.top_cwes) {
            CweId::new(*c)?;
        }
        self.classifier.validate()
    }

    pub fn cwe_list(&self) -> Vec<CweId> {
        self.cwes.iter().filter_map(|c| CweId::new(*c).ok()).collect()
    }

    pub fn top_cwe_list(&self) -> Vec<CweId> {
        self.top_cwes.iter().filter_map(|c| CweId::new(*c).ok()).collect()
    }

    /// SHA-256 of the canonical JSON form with `out` cleared, so the same
    /// experiment written to two directories shares a digest.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("cannot set {key:?}: {part:?} is not a table")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Err(Error::Config(format!("empty override key {key:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = ExperimentConfig {
            synthetic: Some(SyntheticConfig::default()),
            ..Default::default()
        };
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = ExperimentConfig::default()
            .with_overrides(&[
                "r=0.1",
                "classifier.epochs=3",
                "top_cwes=[125, 787]",
                "synthetic.non_vulnerable=40",
                "out=/tmp/x",
                "modes=[\"score\"]",
            ])
            .unwrap();
        assert_eq!(cfg.r, 0.1);
        assert_eq!(cfg.classifier.epochs, 3);
        assert_eq!(cfg.top_cwes, [125, 787]);
        assert_eq!(cfg.synthetic.unwrap().non_vulnerable, 40);
        assert_eq!(cfg.out, PathBuf::from("/tmp/x"));
        assert_eq!(cfg.modes, [EvalMode::Score]);
    }

    #[test]
    fn bad_overrides_are_config_errors() {
        let cfg = ExperimentConfig::default();
        for bad in ["r", "nope=1", "r=\"high\"", "seed.x=1"] {
            assert!(matches!(cfg.with_overrides(&[bad]), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn digest_ignores_out() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            out: "elsewhere".into(),
            ..a.clone()
        };
        assert_eq!(a.digest(), b.digest());
        let c = ExperimentConfig { seed: 2, ..a.clone() };
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig {
            synthetic: Some(SyntheticConfig::default()),
            ..Default::default()
        };
        cfg.validate().unwrap();
        cfg.r = 1.0;
        assert!(cfg.validate().is_err());
        cfg.r = 0.2;
        cfg.synthetic = None;
        assert!(cfg.validate().is_err());
    }
}
