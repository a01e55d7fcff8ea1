use serde::{Deserialize, Serialize};

use super::confusion::{confusion, lookup, ConfusionCounts, Decision};
use super::report::EvalMode;
use crate::classify::PredictionSet;
use crate::error::Result;

/// VD-S result. `threshold` is the chosen operating point; `None` stands for
/// `+inf` (nothing flagged) in score mode and for the 1.0 convention in hard
/// mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdScore {
    pub vd_s: f64,
    pub threshold: Option<f64>,
    pub fpr: f64,
    pub fnr: f64,
    /// No vulnerable records, so every FNR is 0/0.
    pub degenerate: bool,
}

/// One operating point of a threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: Option<f64>,
    pub confusion: ConfusionCounts,
    pub fpr: f64,
    pub fnr: f64,
}

/// Operating points for `+inf` followed by every distinct score, descending.
fn sweep_scores(scores: &[(f64, bool)]) -> Vec<SweepPoint> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let pos = sorted.iter().filter(|(_, y)| *y).count() as u64;
    let neg = sorted.len() as u64 - pos;
    let point = |threshold, tp: u64, fp: u64| {
        let c = ConfusionCounts::new(tp, neg - fp, fp, pos - tp);
        SweepPoint {
            threshold,
            fpr: c.fpr(),
            fnr: c.fnr(),
            confusion: c,
        }
    };
    let mut points = vec![point(None, 0, 0)];
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(point(Some(s), tp, fp));
    }
    points
}

pub fn sweep(pred: &PredictionSet, truth: &[(String, bool)]) -> Result<Vec<SweepPoint>> {
    let scores: Vec<(f64, bool)> = lookup(pred, truth)?
        .into_iter()
        .map(|(p, y)| (p.score().unwrap_or(0.0), y))
        .collect();
    Ok(sweep_scores(&scores))
}

/// Score-mode VD-S over raw `(score, is_vulnerable)` pairs: the minimum FNR
/// among thresholds with `FPR <= r`, at the lowest such threshold.
pub fn vd_score_from_scores(scores: &[(f64, bool)], r: f64) -> VdScore {
    let points = sweep_scores(scores);
    let degenerate = !scores.iter().any(|(_, y)| *y);
    // FPR grows and FNR shrinks as the threshold drops, so the last feasible
    // point is both the lowest feasible threshold and the minimum FNR.
    let best = points
        .iter()
        .take_while(|p| p.fpr <= r)
        .last()
        .expect("+inf always has FPR 0");
    VdScore {
        vd_s: best.fnr,
        threshold: best.threshold,
        fpr: best.fpr,
        fnr: best.fnr,
        degenerate,
    }
}

pub fn vd_score(pred: &PredictionSet, truth: &[(String, bool)], r: f64, mode: EvalMode) -> Result<VdScore> {
    match mode {
        EvalMode::Score => {
            let scores: Vec<(f64, bool)> = lookup(pred, truth)?
                .into_iter()
                .map(|(p, y)| (p.score().unwrap_or(0.0), y))
                .collect();
            Ok(vd_score_from_scores(&scores, r))
        }
        EvalMode::Hard => {
            let c = confusion(pred, truth, Decision::Hard)?;
            let (fpr, fnr) = (c.fpr(), c.fnr());
            let feasible = fpr <= r;
            Ok(VdScore {
                vd_s: if feasible { fnr } else { 1.0 },
                threshold: feasible.then_some(0.5),
                fpr,
                fnr,
                degenerate: c.positives() == 0,
            })
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::test_support::{scored, truth};

    fn sample() -> (PredictionSet, Vec<(String, bool)>) {
        let p = scored(&[
            ("p1", 0.9),
            ("p2", 0.5),
            ("p3", 0.2),
            ("n1", 0.7),
            ("n2", 0.4),
            ("n3", 0.3),
            ("n4", 0.1),
        ]);
        let t = truth(&[
            ("p1", true),
            ("p2", true),
            ("p3", true),
            ("n1", false),
            ("n2", false),
            ("n3", false),
            ("n4", false),
        ]);
        (p, t)
    }

    #[test]
    fn mixed_scores_example() {
        let (p, t) = sample();
        let v = vd_score(&p, &t, 0.25, EvalMode::Score).unwrap();
        assert!((v.vd_s - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(v.threshold, Some(0.5));
    }

    #[test]
    fn separated_scores_reach_zero() {
        let p = scored(&[("a", 0.8), ("b", 0.6), ("c", 0.3)]);
        let t = truth(&[("a", true), ("b", true), ("c", false)]);
        for r in [0.0, 0.1, 0.5] {
            let v = vd_score(&p, &t, r, EvalMode::Score).unwrap();
            assert_eq!(v.vd_s, 0.0);
            assert_eq!(v.threshold, Some(0.6));
        }
        // Every threshold is feasible at r = 1; the lowest one is chosen.
        let v = vd_score(&p, &t, 1.0, EvalMode::Score).unwrap();
        assert_eq!((v.vd_s, v.threshold), (0.0, Some(0.3)));
    }

    #[test]
    fn infinite_threshold_when_top_score_is_negative() {
        let p = scored(&[("a", 0.8), ("b", 0.6)]);
        let t = truth(&[("a", false), ("b", true)]);
        let v = vd_score(&p, &t, 0.0, EvalMode::Score).unwrap();
        assert_eq!((v.vd_s, v.threshold), (1.0, None));
    }

    #[test]
    fn hard_mode_convention() {
        let (p, t) = sample();
        // At 0.5: tp 2, fp 1 of 4 negatives.
        let v = vd_score(&p, &t, 0.2, EvalMode::Hard).unwrap();
        assert_eq!((v.vd_s, v.threshold), (1.0, None));
        let v = vd_score(&p, &t, 0.25, EvalMode::Hard).unwrap();
        assert!((v.vd_s - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_is_monotone() {
        let (p, t) = sample();
        let points = sweep(&p, &t).unwrap();
        assert_eq!(points.len(), 8);
        for w in points.windows(2) {
            assert!(w[1].fpr >= w[0].fpr && w[1].fnr <= w[0].fnr);
        }
        assert_eq!(points.last().unwrap().fnr, 0.0);
        assert_eq!(points.last().unwrap().fpr, 1.0);
    }
}
