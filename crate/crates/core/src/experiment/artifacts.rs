use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::seed::sha256_hex;

/// Provenance written next to a command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub seed: u64,
    pub config_digest: String,
    pub config: ExperimentConfig,
    /// Path relative to the run directory → SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
}

impl RunRecord {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

/// Writes files under one directory and remembers their digests.
pub struct ArtifactLog {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl ArtifactLog {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::write(root, e))?;
        Ok(ArtifactLog {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::write(parent, e))?;
        }
        let bytes = bytes.as_ref();
        std::fs::write(&path, bytes).map_err(|e| Error::write(&path, e))?;
        self.files.insert(rel.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    /// Records files some other writer already put under the root.
    pub fn record_existing(&mut self, paths: &[PathBuf]) -> Result<()> {
        for path in paths {
            let bytes = std::fs::read(path).map_err(|e| Error::read(path, e))?;
            let rel = path
                .strip_prefix(&self.root)
                .unwrap_or(path)
                .to_string_lossy()
                .replace('\\', "/");
            self.files.insert(rel, sha256_hex(&bytes));
        }
        Ok(())
    }

    /// Writes `file_name` (e.g. `run.json`) describing everything written.
    pub fn finish(self, command: &str, cfg: &ExperimentConfig, file_name: &str) -> Result<RunRecord> {
        let record = RunRecord {
            command: command.to_string(),
            seed: cfg.seed,
            config_digest: cfg.digest(),
            config: cfg.clone(),
            artifacts: self.files,
        };
        let mut text = serde_json::to_string_pretty(&record).expect("run record serializes");
        text.push('\n');
        let path = self.root.join(file_name);
        std::fs::write(&path, text).map_err(|e| Error::write(&path, e))?;
        Ok(record)
    }
}
