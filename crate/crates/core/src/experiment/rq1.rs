use std::collections::BTreeMap;

use super::artifacts::ArtifactLog;
use super::config::ExperimentConfig;
use super::grid::{evaluate_cell, predict_sets, sort_by_mode, train_model, write_set};
use super::prepare::{load_or_prepare, Prepared};
use crate::corpus::CweId;
use crate::error::Result;
use crate::eval::{tp_breakdown, Report};
use crate::split::{Rq1Sets, SetBuilder};

pub const M_ALL: &str = "m_all";

pub fn model_name(cwe: CweId) -> String {
    format!("m_{}", cwe.get())
}

pub fn build_rq1(prepared: &Prepared, cfg: &ExperimentConfig) -> Result<Rq1Sets> {
    let mut builder = SetBuilder::new(&prepared.corpus, &prepared.v_split, &prepared.nv_split, cfg.seed)?
        .allow_empty(cfg.allow_empty_cwe);
    builder.build_rq1_sets(&cfg.cwe_list())
}

/// CWE-specific vs. pooled binary: trains `m_all` and one `m_<cwe>` per
/// configured CWE, evaluates each on its own test set, `d_test_balanced` and
/// `d_test_all`, and breaks down the true positives of every `m_<cwe>` on
/// `d_test_all`. Outputs land in `<out>/rq1`.
pub fn cmd_run_rq1(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let prepared = load_or_prepare(cfg)?;
    let corpus = &prepared.corpus;
    let sets = build_rq1(&prepared, cfg)?;
    let mut log = ArtifactLog::new(&cfg.out.join("rq1"))?;
    let mut report = Report::new(format!("CWE-specific vs. pooled binary classifiers (r = {})", cfg.r));
    report.seed = Some(cfg.seed);
    report.config_digest = Some(cfg.digest());

    for (_, train, test) in &sets.per_cwe {
        write_set(&mut log, &mut report, train, corpus, cfg)?;
        write_set(&mut log, &mut report, test, corpus, cfg)?;
    }
    for set in [&sets.train_balanced, &sets.test_balanced, &sets.test_all] {
        write_set(&mut log, &mut report, set, corpus, cfg)?;
    }

    let m_all = train_model(&mut log, M_ALL, &sets.train_balanced, corpus, cfg)?;
    let all_pred = predict_sets(&mut log, &m_all, M_ALL, &[&sets.test_all], corpus)?;
    let mut cwe_preds = BTreeMap::new();
    for (cwe, train, _) in &sets.per_cwe {
        if train.is_empty() {
            log::warn!("skipping {}: empty training set", model_name(*cwe));
            continue;
        }
        let name = model_name(*cwe);
        let model = train_model(&mut log, &name, train, corpus, cfg)?;
        cwe_preds.insert(*cwe, predict_sets(&mut log, &model, &name, &[&sets.test_all], corpus)?);
    }

    let mut rows = Vec::new();
    for (cwe, _, test) in &sets.per_cwe {
        if let Some(pred) = cwe_preds.get(cwe) {
            rows.extend(evaluate_cell(&mut log, pred, test, cfg.r, &cfg.modes)?);
        }
        rows.extend(evaluate_cell(&mut log, &all_pred, test, cfg.r, &cfg.modes)?);
    }
    for set in [&sets.test_balanced, &sets.test_all] {
        rows.extend(evaluate_cell(&mut log, &all_pred, set, cfg.r, &cfg.modes)?);
        for pred in cwe_preds.values() {
            rows.extend(evaluate_cell(&mut log, pred, set, cfg.r, &cfg.modes)?);
        }
    }
    sort_by_mode(&mut rows, &cfg.modes);
    report.metrics = rows;

    let test_ids: Vec<String> = sets.test_all.ids().map(str::to_string).collect();
    for &mode in &cfg.modes {
        for (cwe, pred) in &cwe_preds {
            let mut b = tp_breakdown(pred, corpus, &test_ids, Some(*cwe), mode.decision())?;
            b.dataset = format!("{}:{}", sets.test_all.name, mode.as_str());
            report.breakdowns.push(b);
        }
    }

    let written = report.emit(log.root(), "report")?;
    log.record_existing(&written)?;
    log.finish("run-rq1", cfg, "run.json")?;
    Ok(report)
}
