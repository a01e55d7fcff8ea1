//! Deterministic experiment pipeline for CWE-specific vulnerability detection.
//!
//! The crate covers the whole path from raw function corpora to result tables:
//!
//! - [`corpus`]: ingest JSONL corpora, merge sources, generate seeded synthetic
//!   corpora, and report length / CWE distributions.
//! - [`preprocess`]: whitespace normalization, MD5 content hashing,
//!   first-occurrence de-duplication and the length filter.
//! - [`split`]: per-CWE stratified 90:10 splits and the balanced training /
//!   testing sets for the CWE-specific, pooled-binary and multiclass regimes.
//! - [`classify`]: a C-like tokenizer, hashed n-gram features, a seeded SGD
//!   logistic / softmax classifier and an adapter for external predictions.
//! - [`eval`]: confusion counts, derived metrics, VD-S (FNR at bounded FPR),
//!   per-CWE true-positive breakdowns, pairwise metrics and report rendering.
//! - [`experiment`]: config-driven runners tying everything together.
//!
//! Every stochastic step draws from a stream derived from one root seed, so a
//! run is a pure function of its inputs and configuration.

pub mod classify;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod preprocess;
pub mod seed;
pub mod split;
mod table;

pub use corpus::{CweId, Corpus, FunctionRecord, Label};
pub use error::{Error, Result};
