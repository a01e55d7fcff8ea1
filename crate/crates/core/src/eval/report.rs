use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::breakdown::TpBreakdown;
use super::confusion::{confusion, derive_metrics, ConfusionCounts, Decision};
use super::pairwise::PairwiseReport;
use super::vds::vd_score;
use crate::classify::PredictionSet;
use crate::error::{Error, Result};
use crate::table;

pub const REPORT_SCHEMA: &str = "cwevd-report/1";

const METRICS_HEADER: [&str; 16] = [
    "model", "dataset", "mode", "r", "vd_s", "acc", "f1", "precision", "recall", "fpr", "tp", "tn",
    "fp", "fn", "vd_threshold", "degenerate",
];

/// `Hard` evaluates the recorded labels at a single operating point; `Score`
/// sweeps thresholds for VD-S and reports counts at `score >= 0.5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Hard,
    Score,
}

impl EvalMode {
    pub fn decision(self) -> Decision {
        match self {
            EvalMode::Hard => Decision::Hard,
            EvalMode::Score => Decision::Threshold(0.5),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Hard => "hard",
            EvalMode::Score => "score",
        }
    }
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(EvalMode::Hard),
            "score" => Ok(EvalMode::Score),
            other => Err(Error::Config(format!("unknown evaluation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub dataset: String,
    pub mode: EvalMode,
    pub r: f64,
    #[serde(flatten)]
    pub confusion: ConfusionCounts,
    pub vd_s: f64,
    /// `None` is `+inf` in score mode, the 1.0 convention in hard mode.
    pub vd_threshold: Option<f64>,
    pub acc: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub fpr: f64,
    pub degenerate: Vec<String>,
}

impl MetricsReport {
    pub fn from_confusion(model: &str, dataset: &str, mode: EvalMode, r: f64, c: ConfusionCounts, vd_s: f64, vd_threshold: Option<f64>) -> Self {
        let m = derive_metrics(&c);
        MetricsReport {
            model: model.to_string(),
            dataset: dataset.to_string(),
            mode,
            r,
            confusion: c,
            vd_s,
            vd_threshold,
            acc: m.acc,
            f1: m.f1,
            precision: m.precision,
            recall: m.recall,
            fpr: m.fpr,
            degenerate: m.degenerate,
        }
    }
}

/// Full metric suite of one prediction set on one labeled test set.
pub fn evaluate(
    pred: &PredictionSet,
    truth: &[(String, bool)],
    dataset: &str,
    r: f64,
    mode: EvalMode,
) -> Result<MetricsReport> {
    if !(0.0..1.0).contains(&r) && r != 1.0 {
        return Err(Error::Config(format!("FPR tolerance r must be in [0, 1], got {r}")));
    }
    let c = confusion(pred, truth, mode.decision())?;
    let v = vd_score(pred, truth, r, mode)?;
    let mut report = MetricsReport::from_confusion(&pred.model, dataset, mode, r, c, v.vd_s, v.threshold);
    if v.degenerate {
        report.degenerate.push("vd_s".into());
    }
    Ok(report)
}

/// Versioned bundle of everything one command produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub title: String,
    pub seed: Option<u64>,
    pub config_digest: Option<String>,
    /// Labeled set name → manifest digest.
    pub manifests: BTreeMap<String, String>,
    pub metrics: Vec<MetricsReport>,
    pub breakdowns: Vec<TpBreakdown>,
    pub pairwise: Vec<PairwiseReport>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            schema: REPORT_SCHEMA.into(),
            title: title.into(),
            ..Default::default()
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Report = serde_json::from_str(text).map_err(|e| Error::json("report", e))?;
        if report.schema != REPORT_SCHEMA {
            return Err(Error::Config(format!("unsupported report schema {:?}", report.schema)));
        }
        Ok(report)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.title);
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed: {seed}\n"));
        }
        if let Some(d) = &self.config_digest {
            out.push_str(&format!("config: {d}\n"));
        }
        // one table per mode, in order of first appearance
        let mut modes: Vec<EvalMode> = Vec::new();
        for m in &self.metrics {
            if !modes.contains(&m.mode) {
                modes.push(m.mode);
            }
        }
        for mode in modes {
            let rows: Vec<MetricsReport> =
                self.metrics.iter().filter(|m| m.mode == mode).cloned().collect();
            out.push_str(&format!("\n[{} mode]\n", mode.as_str()));
            out.push_str(&render_metrics_table(&rows));
        }
        let mut datasets: Vec<&str> = Vec::new();
        for b in &self.breakdowns {
            if !datasets.contains(&b.dataset.as_str()) {
                datasets.push(&b.dataset);
            }
        }
        for dataset in datasets {
            let rows: Vec<TpBreakdown> =
                self.breakdowns.iter().filter(|b| b.dataset == dataset).cloned().collect();
            out.push_str(&format!("\n[true positives on {dataset}]\n"));
            out.push_str(&render_breakdown_table(&rows));
        }
        if !self.pairwise.is_empty() {
            out.push('\n');
            out.push_str(&render_pairwise_table(&self.pairwise, &self.metrics));
        }
        out
    }

    /// Writes `<stem>.json`, `<stem>.csv` and `<stem>.txt`, plus
    /// `<stem>.breakdown.csv` / `<stem>.pairwise.csv` when those sections
    /// are present. Returns the written paths.
    pub fn emit(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
        let mut files = vec![
            (dir.join(format!("{stem}.json")), self.to_json()),
            (dir.join(format!("{stem}.csv")), metrics_csv(&self.metrics)?),
            (dir.join(format!("{stem}.txt")), self.to_text()),
        ];
        if !self.breakdowns.is_empty() {
            files.push((dir.join(format!("{stem}.breakdown.csv")), breakdown_csv(&self.breakdowns)?));
        }
        if !self.pairwise.is_empty() {
            files.push((dir.join(format!("{stem}.pairwise.csv")), pairwise_csv(&self.pairwise)?));
        }
        let mut written = Vec::new();
        for (path, body) in files {
            std::fs::write(&path, body).map_err(|e| Error::write(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn float(x: f64) -> String {
    format!("{x}")
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Full-precision CSV in fixed column order.
pub fn metrics_csv(rows: &[MetricsReport]) -> Result<String> {
    csv_string(|w| {
        w.write_record(METRICS_HEADER)?;
        for m in rows {
            let c = &m.confusion;
            w.write_record([
                m.model.clone(),
                m.dataset.clone(),
                m.mode.as_str().to_string(),
                float(m.r),
                float(m.vd_s),
                float(m.acc),
                float(m.f1),
                float(m.precision),
                float(m.recall),
                float(m.fpr),
                c.tp.to_string(),
                c.tn.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
                m.vd_threshold.map(float).unwrap_or_default(),
                m.degenerate.join(";"),
            ])?;
        }
        Ok(())
    })
}

fn breakdown_csv(rows: &[TpBreakdown]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["model", "dataset", "model_cwe", "test_count", "own_tp", "total_tp", "cwe", "count"])?;
        for b in rows {
            let cells = b
                .top
                .iter()
                .map(|(c, n)| (c.get().to_string(), *n))
                .chain(std::iter::once(("rest".to_string(), b.rest)));
            for (cwe, n) in cells {
                w.write_record([
                    b.model.clone(),
                    b.dataset.clone(),
                    b.model_cwe.map(|c| c.get().to_string()).unwrap_or_default(),
                    b.test_count.to_string(),
                    b.own_tp.to_string(),
                    b.total_tp.to_string(),
                    cwe,
                    n.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

fn pairwise_csv(rows: &[PairwiseReport]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["model", "dataset", "mode", "pairs", "p_c", "p_v", "p_b", "p_r"])?;
        for p in rows {
            w.write_record([
                p.model.clone(),
                p.dataset.clone(),
                p.mode.map(|m| m.as_str().to_string()).unwrap_or_default(),
                p.pairs.to_string(),
                float(p.p_c),
                float(p.p_v),
                float(p.p_b),
                float(p.p_r),
            ])?;
        }
        Ok(())
    })
}

/// Re-derives the metrics CSV from a report's JSON.
pub fn csv_from_json(json: &str) -> Result<String> {
    metrics_csv(&Report::from_json(json)?.metrics)
}

/// Rounds half-up (away from zero) at `places` decimals, working on the
/// shortest decimal representation of `x` so that e.g. `0.00005` becomes
/// `0.0001` rather than falling victim to binary representation error.
pub fn format_fixed(x: f64, places: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let repr = format!("{}", x.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut digits: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).map(|b| b - b'0').collect();
    let int_len = int_part.len();
    digits.resize(int_len + places + 1, 0);
    let round_up = digits[int_len + places] >= 5;
    digits.truncate(int_len + places);
    if round_up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - places;
    let text: String = digits.iter().map(|d| char::from(b'0' + d)).collect();
    let sign = if x < 0.0 && digits.iter().any(|d| *d != 0) { "-" } else { "" };
    if places == 0 {
        format!("{sign}{text}")
    } else {
        format!("{sign}{}.{}", &text[..split], &text[split..])
    }
}

/// Columns: Model, Test, VD-S, Acc, F1, Prec, Rec, FPR, TP, TN, FP, FN.
pub fn render_metrics_table(rows: &[MetricsReport]) -> String {
    let mut out: Vec<Vec<String>> = vec![[
        "Model", "Test", "VD-S", "Acc", "F1", "Prec", "Rec", "FPR", "TP", "TN", "FP", "FN",
    ]
    .map(String::from)
    .to_vec()];
    for m in rows {
        let c = &m.confusion;
        out.push(vec![
            m.model.clone(),
            m.dataset.clone(),
            format_fixed(m.vd_s, 4),
            format_fixed(m.acc, 4),
            format_fixed(m.f1, 4),
            format_fixed(m.precision, 4),
            format_fixed(m.recall, 4),
            format_fixed(m.fpr, 4),
            c.tp.to_string(),
            c.tn.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
        ]);
    }
    table::render(&out, 2)
}

/// Columns: CWE, Sum Test, Predictions (CWE:Sum).
pub fn render_breakdown_table(rows: &[TpBreakdown]) -> String {
    let mut out: Vec<Vec<String>> = vec![vec!["CWE".into(), "Sum Test".into(), "Predictions (CWE:Sum)".into()]];
    for b in rows {
        out.push(vec![
            b.model_cwe.map(|c| c.get().to_string()).unwrap_or_else(|| b.model.clone()),
            b.test_count.to_string(),
            b.predictions_cell(),
        ]);
    }
    table::render(&out, 1)
        .lines()
        .map(|l| l.to_string() + "\n")
        .collect()
}

/// Pairwise rows, joined with the matching metrics row (same model and
/// dataset) when one exists: Model, VD-S, Acc, F1, Prec, Rec, FPR, P-C, P-V,
/// P-B, P-R.
pub fn render_pairwise_table(rows: &[PairwiseReport], metrics: &[MetricsReport]) -> String {
    let mut out: Vec<Vec<String>> = vec![[
        "Model", "VD-S", "Acc", "F1", "Prec", "Rec", "FPR", "P-C", "P-V", "P-B", "P-R",
    ]
    .map(String::from)
    .to_vec()];
    for p in rows {
        let mut row = vec![match p.mode {
            Some(mode) => format!("{} ({})", p.model, mode.as_str()),
            None => p.model.clone(),
        }];
        let joined = metrics
            .iter()
            .find(|m| m.model == p.model && m.dataset == p.dataset && p.mode.is_none_or(|x| x == m.mode));
        match joined {
            Some(m) => row.extend([m.vd_s, m.acc, m.f1, m.precision, m.recall, m.fpr].map(|x| format_fixed(x, 4))),
            None => row.extend(std::iter::repeat_n("-".to_string(), 6)),
        }
        row.extend([p.p_c, p.p_v, p.p_b, p.p_r].map(|x| format_fixed(x, 4)));
        out.push(row);
    }
    table::render(&out, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::test_support::{scored, truth};

    #[test]
    fn half_up_rounding() {
        for (x, want) in [
            (0.75775, "0.7578"),
            (0.00005, "0.0001"),
            (0.33804, "0.3380"),
            (0.99995, "1.0000"),
            (1.0, "1.0000"),
            (0.0, "0.0000"),
            (2.0 / 3.0, "0.6667"),
            (9.99996, "10.0000"),
            (1e-7, "0.0000"),
            (-0.25, "-0.2500"),
        ] {
            assert_eq!(format_fixed(x, 4), want, "{x}");
        }
        assert_eq!(format_fixed(2.5, 0), "3");
    }

    #[test]
    fn empty_report_has_headers() {
        assert_eq!(metrics_csv(&[]).unwrap(), METRICS_HEADER.join(",") + "\n");
        assert_eq!(
            render_metrics_table(&[]),
            "Model | Test | VD-S | Acc | F1 | Prec | Rec | FPR | TP | TN | FP | FN\n"
        );
    }

    #[test]
    fn perfect_predictions() {
        let p = scored(&[("a", 1.0), ("b", 0.0)]);
        let t = truth(&[("a", true), ("b", false)]);
        for mode in [EvalMode::Hard, EvalMode::Score] {
            let m = evaluate(&p, &t, "d", 0.2, mode).unwrap();
            assert_eq!((m.acc, m.vd_s), (1.0, 0.0));
        }
    }

    #[test]
    fn json_csv_consistency() {
        let p = scored(&[("a", 0.9), ("b", 0.3), ("c", 0.6)]);
        let t = truth(&[("a", true), ("b", false), ("c", false)]);
        let mut report = Report::new("t");
        report.metrics.push(evaluate(&p, &t, "d", 0.2, EvalMode::Score).unwrap());
        report.metrics.push(evaluate(&p, &t, "d", 0.0, EvalMode::Hard).unwrap());
        assert_eq!(csv_from_json(&report.to_json()).unwrap(), metrics_csv(&report.metrics).unwrap());
        assert_eq!(Report::from_json(&report.to_json()).unwrap(), report);
    }
}
