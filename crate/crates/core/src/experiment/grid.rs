use std::collections::BTreeSet;

use super::artifacts::ArtifactLog;
use super::config::ExperimentConfig;
use crate::classify::{predict, train, Model, PredictionSet};
use crate::corpus::Corpus;
use crate::error::Result;
use crate::eval::{evaluate, sweep, EvalMode, MetricsReport, Report};
use crate::seed::derive_seed;
use crate::split::{LabeledSet, Manifest};

pub(crate) fn set_manifest(set: &LabeledSet, corpus: &Corpus, cfg: &ExperimentConfig) -> Manifest {
    let mut m = set.to_manifest(cfg.seed, &corpus.digest());
    m.notes.insert("config_digest".into(), cfg.digest());
    m
}

/// Writes a labeled set manifest and records its digest in the report.
pub(crate) fn write_set(
    log: &mut ArtifactLog,
    report: &mut Report,
    set: &LabeledSet,
    corpus: &Corpus,
    cfg: &ExperimentConfig,
) -> Result<()> {
    let m = set_manifest(set, corpus, cfg);
    report.manifests.insert(set.name.clone(), m.digest());
    log.write(&format!("sets/{}.json", set.name), m.to_json())?;
    Ok(())
}

/// Trains `name` on `set` with its own derived seed and saves the model.
pub(crate) fn train_model(
    log: &mut ArtifactLog,
    name: &str,
    set: &LabeledSet,
    corpus: &Corpus,
    cfg: &ExperimentConfig,
) -> Result<Model> {
    let seed = derive_seed(cfg.seed, "train", name);
    let model = train(set, corpus, &cfg.classifier, seed)?;
    log.write(&format!("models/{name}.json"), model.to_json())?;
    Ok(model)
}

/// Scores the union of `sets` (first-seen order) and names the result `name`.
pub(crate) fn predict_sets(
    log: &mut ArtifactLog,
    model: &Model,
    name: &str,
    sets: &[&LabeledSet],
    corpus: &Corpus,
) -> Result<PredictionSet> {
    let mut seen = BTreeSet::new();
    let ids: Vec<&str> = sets
        .iter()
        .flat_map(|s| s.ids())
        .filter(|id| seen.insert(*id))
        .collect();
    let mut pred = predict(model, ids, corpus)?;
    pred.model = name.to_string();
    log.write(&format!("predictions/{name}.jsonl"), pred.to_jsonl())?;
    Ok(pred)
}

/// One row per configured mode; score mode also writes the raw sweep.
pub(crate) fn evaluate_cell(
    log: &mut ArtifactLog,
    pred: &PredictionSet,
    set: &LabeledSet,
    r: f64,
    modes: &[EvalMode],
) -> Result<Vec<MetricsReport>> {
    let truth = set.binary_truth();
    let mut rows = Vec::new();
    for &mode in modes {
        rows.push(evaluate(pred, &truth, &set.name, r, mode)?);
        if mode == EvalMode::Score {
            log.write(&format!("sweeps/{}__{}.csv", pred.model, set.name), sweep_csv(pred, &truth)?)?;
        }
    }
    Ok(rows)
}

fn sweep_csv(pred: &PredictionSet, truth: &[(String, bool)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["threshold", "tp", "tn", "fp", "fn", "fpr", "fnr"])?;
    for p in sweep(pred, truth)? {
        let c = p.confusion;
        w.write_record([
            p.threshold.map_or_else(|| "inf".to_string(), |t| t.to_string()),
            c.tp.to_string(),
            c.tn.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            p.fpr.to_string(),
            p.fnr.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Orders rows mode-major, keeping insertion order within a mode.
pub(crate) fn sort_by_mode(rows: &mut [MetricsReport], modes: &[EvalMode]) {
    rows.sort_by_key(|m| modes.iter().position(|x| *x == m.mode));
}
