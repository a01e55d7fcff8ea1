use std::collections::HashSet;
use std::path::{Path, PathBuf};

use super::artifacts::ArtifactLog;
use super::config::{ExperimentConfig, SyntheticConfig};
use super::grid::set_manifest;
use super::prepare::{load_corpus, load_or_prepare, split_corpus, split_manifest, Prepared};
use super::rq1::build_rq1;
use super::rq2::build_rq2;
use crate::classify::{
    collapse_multiclass, load_external_predictions, predict, train, Hyperparameters, Model,
    PredictionKind, PredictionSet,
};
use crate::corpus::{corpus_stats, cwe_distribution, generate_synthetic};
use crate::error::{Error, Result};
use crate::eval::{evaluate, pairwise_eval, EvalMode, Report};
use crate::split::{LabeledSet, Manifest};

/// Writes the configured synthetic corpus (defaults when none is configured)
/// to `<out>/synthetic.jsonl`.
pub fn cmd_gen_synthetic(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let spec = cfg.synthetic.clone().unwrap_or_default().spec(cfg.seed)?;
    let corpus = generate_synthetic(&spec)?;
    let mut log = ArtifactLog::new(&cfg.out)?;
    let path = log.write("synthetic.jsonl", corpus.to_jsonl())?;
    log.finish("gen-synthetic", cfg, "run-gen-synthetic.json")?;
    Ok(path)
}

/// Length buckets, CWE ranking and length histogram of a canonical corpus
/// file, written under `<out>/stats`.
pub fn cmd_stats(corpus_path: &Path, cfg: &ExperimentConfig) -> Result<String> {
    let corpus = load_corpus(corpus_path)?;
    let stats = corpus_stats(&corpus);
    let mut log = ArtifactLog::new(&cfg.out.join("stats"))?;
    log.write("stats.csv", stats.to_csv())?;
    log.write("stats.txt", stats.to_table())?;
    log.write("length_histogram.csv", stats.histogram_csv())?;
    log.write("cwe_distribution.csv", cwe_distribution(&corpus).to_csv())?;
    log.finish("stats", cfg, "run.json")?;
    Ok(stats.to_table())
}

/// Splits and labeled-set manifests for both experiments, under
/// `<out>/splits`. With `corpus_path` the given canonical corpus is split;
/// otherwise the prepared corpus is used (preparing it if needed).
pub fn cmd_split(cfg: &ExperimentConfig, corpus_path: Option<&Path>) -> Result<Vec<Manifest>> {
    cfg.validate_split()?;
    let prepared = match corpus_path {
        Some(path) => {
            let corpus = load_corpus(path)?;
            let (v_split, nv_split) = split_corpus(&corpus, cfg)?;
            Prepared {
                corpus,
                v_split,
                nv_split,
            }
        }
        None => load_or_prepare(cfg)?,
    };
    let corpus = &prepared.corpus;
    let mut manifests = vec![
        split_manifest(&prepared.v_split, 1, cfg),
        split_manifest(&prepared.nv_split, 0, cfg),
    ];
    let rq1 = build_rq1(&prepared, cfg)?;
    let mut sets: Vec<(&str, &LabeledSet)> = Vec::new();
    for (_, tr, te) in &rq1.per_cwe {
        sets.push(("rq1", tr));
        sets.push(("rq1", te));
    }
    sets.extend([("rq1", &rq1.train_balanced), ("rq1", &rq1.test_balanced), ("rq1", &rq1.test_all)]);
    let rq2 = build_rq2(&prepared, cfg)?;
    sets.extend([("rq2", &rq2.train_binary), ("rq2", &rq2.train_multiclass), ("rq2", &rq2.test_rq2)]);
    sets.extend(rq2.per_cwe_tests.iter().map(|(_, t)| ("rq2", t)));

    let mut log = ArtifactLog::new(&cfg.out.join("splits"))?;
    log.write("d_v.json", manifests[0].to_json())?;
    log.write("d_nv.json", manifests[1].to_json())?;
    for (group, set) in sets {
        let m = set_manifest(set, corpus, cfg);
        log.write(&format!("{group}/{}.json", set.name), m.to_json())?;
        manifests.push(m);
    }
    log.write("rq1/draw_order.txt", rq1.draw_order.join("\n") + "\n")?;
    log.write("rq2/draw_order.txt", rq2.draw_order.join("\n") + "\n")?;
    log.finish("split", cfg, "run.json")?;
    Ok(manifests)
}

fn read_set(path: &Path) -> Result<LabeledSet> {
    LabeledSet::from_manifest(&Manifest::read(path)?)
}

/// Trains on a labeled-set manifest and saves the model to `model_out`.
pub fn cmd_train(
    corpus_path: &Path,
    set_path: &Path,
    hp: &Hyperparameters,
    seed: u64,
    model_out: &Path,
) -> Result<Model> {
    let corpus = load_corpus(corpus_path)?;
    let set = read_set(set_path)?;
    let model = train(&set, &corpus, hp, seed)?;
    if let Some(parent) = model_out.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::write(parent, e))?;
    }
    model.save(model_out)?;
    Ok(model)
}

/// Scores the ids of `set_path` (every record when `None`) and writes JSONL.
/// Multiclass models write their distributions unless `collapse` is set.
pub fn cmd_predict(
    model_path: &Path,
    corpus_path: &Path,
    set_path: Option<&Path>,
    collapse: bool,
    out: &Path,
) -> Result<PredictionSet> {
    let model = Model::load(model_path)?;
    let corpus = load_corpus(corpus_path)?;
    let ids: Vec<String> = match set_path {
        Some(p) => read_set(p)?.ids().map(str::to_string).collect(),
        None => corpus.records.iter().map(|r| r.id.clone()).collect(),
    };
    let mut pred = predict(&model, ids.iter().map(String::as_str), &corpus)?;
    if collapse && pred.kind == PredictionKind::Multiclass {
        pred = collapse_multiclass(&pred)?;
    }
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::write(parent, e))?;
    }
    pred.write_jsonl(out)?;
    Ok(pred)
}

/// Evaluation of a prediction file against a labeled-set manifest, under
/// `<out>/evaluate`.
pub struct EvaluateRequest<'a> {
    pub predictions: &'a Path,
    pub manifest: &'a Path,
    pub modes: &'a [EvalMode],
    /// Canonical corpus; enables the pairwise report when it holds pairs
    /// whose members are both in the manifest.
    pub corpus: Option<&'a Path>,
}

pub fn cmd_evaluate(req: &EvaluateRequest<'_>, cfg: &ExperimentConfig) -> Result<Report> {
    let set = read_set(req.manifest)?;
    let pred = load_external_predictions(req.predictions, None)?;
    let mut pred = match pred.kind {
        PredictionKind::Binary => pred,
        PredictionKind::Multiclass => collapse_multiclass(&pred)?,
    };
    pred.model = req
        .predictions
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "external".into());
    let truth = set.binary_truth();
    let mut report = Report::new(format!("{} on {} (r = {})", pred.model, set.name, cfg.r));
    report.seed = Some(cfg.seed);
    report.config_digest = Some(cfg.digest());
    report
        .manifests
        .insert(set.name.clone(), Manifest::read(req.manifest)?.digest());
    for &mode in req.modes {
        report.metrics.push(evaluate(&pred, &truth, &set.name, cfg.r, mode)?);
    }
    if let Some(corpus_path) = req.corpus {
        let corpus = load_corpus(corpus_path)?;
        let members: HashSet<&str> = set.ids().collect();
        let pairs: Vec<(String, String)> = corpus
            .pairs()
            .into_iter()
            .filter(|(v, b)| members.contains(v.as_str()) && members.contains(b.as_str()))
            .collect();
        if !pairs.is_empty() {
            for &mode in req.modes {
                let mut p = pairwise_eval(&pred, &pairs, mode.decision())?;
                p.dataset = set.name.clone();
                p.mode = Some(mode);
                report.pairwise.push(p);
            }
        }
    }
    let mut log = ArtifactLog::new(&cfg.out.join("evaluate"))?;
    let written = report.emit(log.root(), "report")?;
    log.record_existing(&written)?;
    log.finish("evaluate", cfg, "run.json")?;
    Ok(report)
}

/// Merges report JSON files and re-renders them under `<out>/report`.
pub fn cmd_report(inputs: &[PathBuf], cfg: &ExperimentConfig) -> Result<Report> {
    if inputs.is_empty() {
        return Err(Error::Config("report needs at least one report JSON".into()));
    }
    let mut merged = Report::new("Merged results");
    for path in inputs {
        let text = std::fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        let r = Report::from_json(&text)?;
        if inputs.len() == 1 {
            merged.title = r.title.clone();
        }
        merged.seed = merged.seed.or(r.seed);
        merged.config_digest = merged.config_digest.or(r.config_digest);
        merged.manifests.extend(r.manifests);
        merged.metrics.extend(r.metrics);
        merged.breakdowns.extend(r.breakdowns);
        merged.pairwise.extend(r.pairwise);
    }
    merged.emit(&cfg.out.join("report"), "report")?;
    Ok(merged)
}

/// Synthetic defaults for quick runs.
pub fn synthetic_config(seed: u64, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        synthetic: Some(SyntheticConfig::default()),
        out: out.to_path_buf(),
        ..Default::default()
    }
}

