use std::path::Path;

use serde::{Deserialize, Serialize};

use super::artifacts::{ArtifactLog, RunRecord};
use super::config::ExperimentConfig;
use crate::corpus::{
    corpus_stats, cwe_distribution, generate_synthetic, ingest_jsonl, merge_corpora, Corpus,
    FieldSchema, SourceDescriptor,
};
use crate::error::Result;
use crate::preprocess::{deduplicate, filter_length, DedupReport, LabelCounts, LengthFilterReport};
use crate::split::{split_nonvulnerable, stratified_split_vulnerable, DatasetSplit, Manifest, SplitConfig};

const PREPARE_RECORD: &str = "run-prepare.json";

/// Output of the data pipeline: the final corpus and its two splits.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub corpus: Corpus,
    pub v_split: DatasetSplit,
    pub nv_split: DatasetSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareSummary {
    pub seed: u64,
    pub config_digest: String,
    pub sources: Vec<SourceDescriptor>,
    pub merged: usize,
    pub dedup: DedupReport,
    pub length_filter: LengthFilterReport,
    pub kept: LabelCounts,
    pub corpus_digest: String,
}

/// Reads every configured input (then the synthetic corpus, if any) and
/// merges them in that order.
pub fn load_inputs(cfg: &ExperimentConfig) -> Result<Corpus> {
    let mut parts = Vec::new();
    for input in &cfg.inputs {
        parts.push(ingest_jsonl(&input.path, &input.source, &input.field_schema()?)?);
    }
    if let Some(s) = &cfg.synthetic {
        parts.push(generate_synthetic(&s.spec(cfg.seed)?)?);
    }
    merge_corpora(parts)
}

/// Reads a corpus in this crate's canonical JSONL form.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    ingest_jsonl(path, "corpus", &FieldSchema::canonical())
}

pub fn split_corpus(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<(DatasetSplit, DatasetSplit)> {
    let split_cfg = SplitConfig {
        train_ratio: cfg.train_ratio,
        seed: cfg.seed,
    };
    let digest = corpus.digest();
    let v = stratified_split_vulnerable(&corpus.vulnerable(), &split_cfg)?.with_corpus_digest(&digest);
    let nv = split_nonvulnerable(&corpus.non_vulnerable(), &split_cfg)?.with_corpus_digest(&digest);
    Ok((v, nv))
}

pub(crate) fn split_manifest(split: &DatasetSplit, label: u32, cfg: &ExperimentConfig) -> Manifest {
    let mut m = split.to_manifest(label);
    m.notes.insert("config_digest".into(), cfg.digest());
    m
}

/// ingest → merge → deduplicate → length filter → stratified splits, and
/// writes the corpus, reports and split manifests under `cfg.out`.
pub fn cmd_prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let merged = load_inputs(cfg)?;
    let (deduped, dedup) = deduplicate(&merged);
    let stats = corpus_stats(&deduped);
    let (corpus, length_filter) = filter_length(&deduped, cfg.max_len);
    let (v_split, nv_split) = split_corpus(&corpus, cfg)?;
    log::info!(
        "prepared {} records ({} dropped as duplicates, {} over {} chars)",
        corpus.len(),
        dedup.dropped,
        length_filter.dropped.total(),
        cfg.max_len
    );

    let summary = PrepareSummary {
        seed: cfg.seed,
        config_digest: cfg.digest(),
        sources: merged.provenance.clone(),
        merged: merged.len(),
        dedup,
        length_filter,
        kept: length_filter.kept,
        corpus_digest: corpus.digest(),
    };
    let mut log = ArtifactLog::new(&cfg.out)?;
    log.write("corpus.jsonl", corpus.to_jsonl())?;
    log.write("dedup.json", serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;
    log.write("stats.csv", stats.to_csv())?;
    log.write("stats.txt", stats.to_table())?;
    log.write("length_histogram.csv", corpus_stats(&corpus).histogram_csv())?;
    log.write("cwe_distribution.csv", cwe_distribution(&corpus).to_csv())?;
    log.write("splits/d_v.json", split_manifest(&v_split, 1, cfg).to_json())?;
    log.write("splits/d_nv.json", split_manifest(&nv_split, 0, cfg).to_json())?;
    log.finish("prepare", cfg, PREPARE_RECORD)?;
    Ok(Prepared {
        corpus,
        v_split,
        nv_split,
    })
}

/// Reuses prepared artifacts in `cfg.out` when they were produced by the same
/// configuration, otherwise runs [`cmd_prepare`].
pub fn load_or_prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let record_path = cfg.out.join(PREPARE_RECORD);
    if record_path.exists() {
        if let Ok(record) = RunRecord::read(&record_path) {
            if record.config_digest == cfg.digest() {
                if let Some(p) = try_load(&cfg.out)? {
                    return Ok(p);
                }
            }
        }
        log::info!("prepared artifacts in {} are stale; rebuilding", cfg.out.display());
    }
    cmd_prepare(cfg)
}

fn try_load(dir: &Path) -> Result<Option<Prepared>> {
    let corpus = load_corpus(&dir.join("corpus.jsonl"))?;
    let v = DatasetSplit::from_manifest(&Manifest::read(&dir.join("splits/d_v.json"))?)?;
    let nv = DatasetSplit::from_manifest(&Manifest::read(&dir.join("splits/d_nv.json"))?)?;
    let digest = corpus.digest();
    if v.metadata.corpus_digest != digest || nv.metadata.corpus_digest != digest {
        return Ok(None);
    }
    Ok(Some(Prepared {
        corpus,
        v_split: v,
        nv_split: nv,
    }))
}
