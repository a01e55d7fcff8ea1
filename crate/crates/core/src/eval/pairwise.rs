use serde::{Deserialize, Serialize};

use super::confusion::{ratio, Decision};
use super::report::EvalMode;
use crate::classify::PredictionSet;
use crate::error::{Error, Result};

/// Outcome fractions over (vulnerable, fixed) pairs.
///
/// - `p_c`: vulnerable flagged, fixed not flagged
/// - `p_v`: both flagged
/// - `p_b`: neither flagged
/// - `p_r`: fixed flagged, vulnerable not flagged
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub model: String,
    pub dataset: String,
    /// Decision rule the counts were taken under, when known.
    pub mode: Option<EvalMode>,
    pub pairs: u64,
    pub counts: [u64; 4],
    pub p_c: f64,
    pub p_v: f64,
    pub p_b: f64,
    pub p_r: f64,
}

impl PairwiseReport {
    pub fn from_counts(model: &str, dataset: &str, counts: [u64; 4]) -> Self {
        let pairs = counts.iter().sum();
        PairwiseReport {
            model: model.to_string(),
            dataset: dataset.to_string(),
            mode: None,
            pairs,
            counts,
            p_c: ratio(counts[0], pairs),
            p_v: ratio(counts[1], pairs),
            p_b: ratio(counts[2], pairs),
            p_r: ratio(counts[3], pairs),
        }
    }
}

pub fn pairwise_eval(
    pred: &PredictionSet,
    pairs: &[(String, String)],
    decision: Decision,
) -> Result<PairwiseReport> {
    pred.require_binary()?;
    let missing = pred.missing(pairs.iter().flat_map(|(v, b)| [v.as_str(), b.as_str()]));
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    let mut counts = [0u64; 4];
    for (vuln, benign) in pairs {
        let v = decision.is_positive(&pred.entries[vuln]);
        let b = decision.is_positive(&pred.entries[benign]);
        let bucket = match (v, b) {
            (true, false) => 0,
            (true, true) => 1,
            (false, false) => 2,
            (false, true) => 3,
        };
        counts[bucket] += 1;
    }
    Ok(PairwiseReport::from_counts(&pred.model, "", counts))
}
