use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid CWE id {0:?}")]
    InvalidCwe(String),

    #[error("no synthetic template family for CWE-{0}")]
    UnknownCweFamily(u32),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-vulnerable pool `{pool}` exhausted: {required} required, {available} available")]
    PoolExhausted {
        pool: String,
        required: usize,
        available: usize,
    },

    #[error("CWE-{cwe} has no vulnerable samples on the {side} side")]
    EmptyCwe { cwe: u32, side: String },

    #[error("{what}: unknown record ids: {}", .ids.join(", "))]
    UnknownIds { what: String, ids: Vec<String> },

    #[error("missing predictions for ids: {}", .0.join(", "))]
    MissingPredictions(Vec<String>),

    #[error("{path}:{line}: {message}")]
    BadLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid training set: {0}")]
    Training(String),

    #[error("prediction kind mismatch: {0}")]
    PredictionKind(String),

    #[error("malformed {what}: {source}")]
    Json {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by the caller's inputs or configuration rather than a
    /// defect in the pipeline. The CLI maps these to exit code 2.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Write { .. } | Error::Csv(_))
    }

    pub(crate) fn read(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Read {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Write {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(what: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            what: what.into(),
            source,
        }
    }
}
