use std::collections::HashSet;

use super::artifacts::ArtifactLog;
use super::config::ExperimentConfig;
use super::grid::{evaluate_cell, predict_sets, sort_by_mode, train_model, write_set};
use super::prepare::{load_or_prepare, Prepared};
use crate::classify::{collapse_multiclass, load_external_predictions, PredictionKind, PredictionSet};
use crate::error::Result;
use crate::eval::{pairwise_eval, Report};
use crate::split::{LabeledSet, Rq2Sets, SetBuilder, SetKind, Side};

pub const M_BINARY: &str = "m_binary";
pub const M_MULTICLASS: &str = "m_multiclass";

pub fn build_rq2(prepared: &Prepared, cfg: &ExperimentConfig) -> Result<Rq2Sets> {
    let mut builder = SetBuilder::new(&prepared.corpus, &prepared.v_split, &prepared.nv_split, cfg.seed)?
        .allow_empty(cfg.allow_empty_cwe);
    builder.build_rq2_sets(&cfg.top_cwe_list())
}

/// (vulnerable, fixed) pairs with both members on the test side.
pub fn test_pairs(prepared: &Prepared) -> Vec<(String, String)> {
    let v: HashSet<&str> = prepared.v_split.test_ids.iter().map(String::as_str).collect();
    let nv: HashSet<&str> = prepared.nv_split.test_ids.iter().map(String::as_str).collect();
    prepared
        .corpus
        .pairs()
        .into_iter()
        .filter(|(a, b)| v.contains(a.as_str()) && nv.contains(b.as_str()))
        .collect()
}

fn pairs_set(pairs: &[(String, String)]) -> LabeledSet {
    LabeledSet {
        name: "d_pairs".into(),
        side: Side::Test,
        kind: SetKind::Binary,
        entries: pairs
            .iter()
            .flat_map(|(v, b)| [(v.clone(), 1), (b.clone(), 0)])
            .collect(),
    }
}

/// Binary vs. multiclass on identical training membership. The multiclass
/// output is collapsed (any non-zero class is vulnerable) before evaluation
/// on `d_test_rq2` and each per-CWE test set. When the corpus holds
/// (vulnerable, fixed) pairs on the test side, a pairwise report at
/// `pairwise_r` is added. Outputs land in `<out>/rq2`.
pub fn cmd_run_rq2(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let prepared = load_or_prepare(cfg)?;
    let corpus = &prepared.corpus;
    let sets = build_rq2(&prepared, cfg)?;
    let pairs = test_pairs(&prepared);
    let d_pairs = pairs_set(&pairs);

    let mut log = ArtifactLog::new(&cfg.out.join("rq2"))?;
    let mut report = Report::new(format!("Binary vs. multiclass classifiers (r = {})", cfg.r));
    report.seed = Some(cfg.seed);
    report.config_digest = Some(cfg.digest());
    for set in [&sets.train_binary, &sets.train_multiclass, &sets.test_rq2] {
        write_set(&mut log, &mut report, set, corpus, cfg)?;
    }
    for (_, test) in &sets.per_cwe_tests {
        write_set(&mut log, &mut report, test, corpus, cfg)?;
    }
    if !pairs.is_empty() {
        write_set(&mut log, &mut report, &d_pairs, corpus, cfg)?;
    }

    let mut scored: Vec<&LabeledSet> = vec![&sets.test_rq2];
    scored.extend(sets.per_cwe_tests.iter().map(|(_, t)| t));
    scored.push(&d_pairs);

    let binary = train_model(&mut log, M_BINARY, &sets.train_binary, corpus, cfg)?;
    let binary_pred = predict_sets(&mut log, &binary, M_BINARY, &scored, corpus)?;
    let multi = train_model(&mut log, M_MULTICLASS, &sets.train_multiclass, corpus, cfg)?;
    let raw = predict_sets(&mut log, &multi, &format!("{M_MULTICLASS}.dist"), &scored, corpus)?;
    let mut multi_pred = collapse_multiclass(&raw)?;
    multi_pred.model = M_MULTICLASS.into();
    log.write(&format!("predictions/{M_MULTICLASS}.jsonl"), multi_pred.to_jsonl())?;

    let mut preds = vec![binary_pred, multi_pred];
    if let Some(path) = &cfg.external_predictions {
        preds.push(load_external(path)?);
    }

    let mut rows = Vec::new();
    for pred in &preds {
        rows.extend(evaluate_cell(&mut log, pred, &sets.test_rq2, cfg.r, &cfg.modes)?);
    }
    for (_, test) in &sets.per_cwe_tests {
        for pred in &preds {
            rows.extend(evaluate_cell(&mut log, pred, test, cfg.r, &cfg.modes)?);
        }
    }
    if !pairs.is_empty() {
        for pred in &preds {
            rows.extend(evaluate_cell(&mut log, pred, &d_pairs, cfg.pairwise_r, &cfg.modes)?);
            for &mode in &cfg.modes {
                let mut p = pairwise_eval(pred, &pairs, mode.decision())?;
                p.dataset = d_pairs.name.clone();
                p.mode = Some(mode);
                report.pairwise.push(p);
            }
        }
    }
    sort_by_mode(&mut rows, &cfg.modes);
    report.metrics = rows;

    let written = report.emit(log.root(), "report")?;
    log.record_existing(&written)?;
    log.finish("run-rq2", cfg, "run.json")?;
    Ok(report)
}

fn load_external(path: &std::path::Path) -> Result<PredictionSet> {
    let pred = load_external_predictions(path, None)?;
    let mut pred = match pred.kind {
        PredictionKind::Binary => pred,
        PredictionKind::Multiclass => collapse_multiclass(&pred)?,
    };
    pred.model = "external".into();
    Ok(pred)
}
