//! Function corpora: records, ingestion, merging, synthetic generation and
//! distribution statistics.

mod ingest;
mod record;
mod stats;
pub mod synthetic;

pub use ingest::{ingest_jsonl, ingest_reader, merge_corpora, FieldSchema};
pub use record::{Corpus, CorpusIndex, CweId, FunctionRecord, Label, SourceDescriptor};
pub use stats::{
    corpus_stats, cwe_distribution, CweDistribution, LabelBuckets, LengthBucketReport,
    LENGTH_BUCKET_EDGES,
};
pub use synthetic::{generate_synthetic, SyntheticSpec};
