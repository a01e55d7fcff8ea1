use serde::{Deserialize, Serialize};

use crate::classify::{Prediction, PredictionSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionCounts { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn add(&mut self, actual: bool, predicted: bool) {
        match (actual, predicted) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// `fp / (fp + tn)`, 0 when there are no negatives.
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.negatives())
    }

    /// `fn / (tp + fn)`, 0 when there are no positives.
    pub fn fnr(&self) -> f64 {
        ratio(self.fn_, self.positives())
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// How a binary prediction becomes a positive/negative call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    /// The recorded hard label (`score >= 0.5` when none was recorded).
    Hard,
    /// Positive iff `score >= t`.
    Threshold(f64),
}

impl Decision {
    pub fn is_positive(&self, p: &Prediction) -> bool {
        match (self, p) {
            (Decision::Hard, _) => p.hard_label().unwrap_or(false),
            (Decision::Threshold(t), Prediction::Binary { score, .. }) => *score >= *t,
            (Decision::Threshold(_), Prediction::Multiclass { .. }) => false,
        }
    }
}

/// Looks up every truth id, failing with the full list of missing ones.
pub(crate) fn lookup<'p>(
    pred: &'p PredictionSet,
    truth: &[(String, bool)],
) -> Result<Vec<(&'p Prediction, bool)>> {
    pred.require_binary()?;
    let missing = pred.missing(truth.iter().map(|(id, _)| id.as_str()));
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    Ok(truth.iter().map(|(id, y)| (&pred.entries[id], *y)).collect())
}

pub fn confusion(pred: &PredictionSet, truth: &[(String, bool)], decision: Decision) -> Result<ConfusionCounts> {
    let mut c = ConfusionCounts::default();
    for (p, y) in lookup(pred, truth)? {
        c.add(y, decision.is_positive(p));
    }
    Ok(c)
}

pub fn confusion_at_threshold(pred: &PredictionSet, truth: &[(String, bool)], t: f64) -> Result<ConfusionCounts> {
    confusion(pred, truth, Decision::Threshold(t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub fpr: f64,
    /// Names of metrics whose denominator was zero (reported as 0).
    pub degenerate: Vec<String>,
}

pub fn derive_metrics(c: &ConfusionCounts) -> Metrics {
    let mut degenerate = Vec::new();
    let mut frac = |name: &str, num: u64, den: u64| {
        if den == 0 {
            degenerate.push(name.to_string());
        }
        ratio(num, den)
    };
    let acc = frac("acc", c.tp + c.tn, c.total());
    let precision = frac("precision", c.tp, c.tp + c.fp);
    let recall = frac("recall", c.tp, c.tp + c.fn_);
    let fpr = frac("fpr", c.fp, c.fp + c.tn);
    let f1 = if precision + recall == 0.0 {
        degenerate.push("f1".into());
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        acc,
        f1,
        precision,
        recall,
        fpr,
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::test_support::{scored, truth};

    #[test]
    fn perfect_and_boundary() {
        let p = scored(&[("pos", 1.0), ("neg", 0.0)]);
        let t = truth(&[("pos", true), ("neg", false)]);
        assert_eq!(confusion_at_threshold(&p, &t, 0.5).unwrap(), ConfusionCounts::new(1, 1, 0, 0));
        assert_eq!(confusion_at_threshold(&p, &t, 1.5).unwrap(), ConfusionCounts::new(0, 1, 0, 1));
    }

    #[test]
    fn score_equal_to_threshold_is_positive() {
        let p = scored(&[("a", 0.5), ("b", 0.5)]);
        let t = truth(&[("a", true), ("b", false)]);
        assert_eq!(confusion(&p, &t, Decision::Hard).unwrap(), ConfusionCounts::new(1, 0, 1, 0));
    }

    #[test]
    fn missing_ids_listed() {
        let p = scored(&[("a", 0.5)]);
        let t = truth(&[("a", true), ("x", false), ("y", true)]);
        match confusion(&p, &t, Decision::Hard) {
            Err(Error::MissingPredictions(ids)) => assert_eq!(ids, ["x", "y"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reported_rows() {
        let m = derive_metrics(&ConfusionCounts::new(137, 128, 22, 13));
        for (got, want) in [(m.acc, 0.8833), (m.f1, 0.8867), (m.precision, 0.8616), (m.recall, 0.9133), (m.fpr, 0.1467)] {
            assert!((got - want).abs() <= 5e-5, "{got} vs {want}");
        }
        assert!(m.degenerate.is_empty());
    }

    #[test]
    fn degenerate_flags() {
        let m = derive_metrics(&ConfusionCounts::new(0, 10, 0, 0));
        assert_eq!(m.acc, 1.0);
        assert_eq!((m.precision, m.recall, m.f1, m.fpr), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(m.degenerate, ["precision", "recall", "f1"]);
        let empty = derive_metrics(&ConfusionCounts::default());
        assert_eq!(empty.degenerate.len(), 5);
    }
}
