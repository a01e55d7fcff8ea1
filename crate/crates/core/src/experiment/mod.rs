//! Config-driven runners: data preparation, the CWE-specific vs. pooled
//! comparison, the binary vs. multiclass comparison, and single-step
//! commands (synthetic generation, stats, splits, training, prediction,
//! evaluation of external predictions, report merging).
//!
//! Every runner writes into the configured output directory and leaves a
//! `run.json` (or `run-<command>.json`) with the config, its digest, the root
//! seed and the SHA-256 of every file it wrote. Module seeds are derived from
//! the root seed, so equal configs give byte-identical outputs.

mod artifacts;
mod commands;
mod config;
mod grid;
mod prepare;
mod rq1;
mod rq2;

pub use artifacts::{ArtifactLog, RunRecord};
pub use commands::{
    cmd_evaluate, cmd_gen_synthetic, cmd_predict, cmd_report, cmd_split, cmd_stats, cmd_train,
    synthetic_config, EvaluateRequest,
};
pub use config::{ExperimentConfig, InputSpec, SyntheticConfig};
pub use prepare::{cmd_prepare, load_corpus, load_inputs, load_or_prepare, split_corpus, PrepareSummary, Prepared};
pub use rq1::{build_rq1, cmd_run_rq1, model_name, M_ALL};
pub use rq2::{build_rq2, cmd_run_rq2, test_pairs, M_BINARY, M_MULTICLASS};
