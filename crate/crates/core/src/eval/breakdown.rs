use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::confusion::Decision;
use crate::classify::PredictionSet;
use crate::corpus::{Corpus, CweId};
use crate::error::{Error, Result};

/// Number of CWEs listed individually before the "Rest" bucket.
pub const BREAKDOWN_TOP: usize = 10;

/// True positives of one model split by the primary CWE of each flagged
/// vulnerable record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpBreakdown {
    pub model: String,
    pub dataset: String,
    pub model_cwe: Option<CweId>,
    /// Vulnerable test records whose primary CWE is `model_cwe`.
    pub test_count: usize,
    pub own_tp: usize,
    pub total_tp: usize,
    /// Largest buckets, descending by count, ties by ascending CWE id.
    pub top: Vec<(CweId, usize)>,
    /// Everything outside `top`, including vulnerable records without a CWE.
    pub rest: usize,
}

impl TpBreakdown {
    pub fn from_counts(
        model: &str,
        dataset: &str,
        model_cwe: Option<CweId>,
        test_count: usize,
        counts: &BTreeMap<CweId, usize>,
        unattributed: usize,
    ) -> Self {
        let mut ranked: Vec<(CweId, usize)> = counts.iter().map(|(c, n)| (*c, *n)).filter(|(_, n)| *n > 0).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let total_tp = ranked.iter().map(|(_, n)| n).sum::<usize>() + unattributed;
        let rest = ranked.iter().skip(BREAKDOWN_TOP).map(|(_, n)| n).sum::<usize>() + unattributed;
        ranked.truncate(BREAKDOWN_TOP);
        TpBreakdown {
            model: model.to_string(),
            dataset: dataset.to_string(),
            model_cwe,
            test_count,
            own_tp: model_cwe.and_then(|c| counts.get(&c).copied()).unwrap_or(0),
            total_tp,
            top: ranked,
            rest,
        }
    }

    /// `125:137, 787:52, ..., Rest:117`
    pub fn predictions_cell(&self) -> String {
        let mut parts: Vec<String> = self.top.iter().map(|(c, n)| format!("{}:{n}", c.get())).collect();
        parts.push(format!("Rest:{}", self.rest));
        parts.join(", ")
    }
}

pub fn tp_breakdown(
    pred: &PredictionSet,
    corpus: &Corpus,
    test_ids: &[String],
    model_cwe: Option<CweId>,
    decision: Decision,
) -> Result<TpBreakdown> {
    pred.require_binary()?;
    let missing = pred.missing(test_ids.iter().map(String::as_str));
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    let index = corpus.index();
    let records = index.resolve(test_ids.iter().map(String::as_str), "breakdown")?;
    let mut counts: BTreeMap<CweId, usize> = BTreeMap::new();
    let mut unattributed = 0;
    let mut test_count = 0;
    for record in records.into_iter().filter(|r| r.is_vulnerable()) {
        let primary = record.primary_cwe();
        if primary.is_some() && primary == model_cwe {
            test_count += 1;
        }
        if decision.is_positive(&pred.entries[&record.id]) {
            match primary {
                Some(c) => *counts.entry(c).or_default() += 1,
                None => unattributed += 1,
            }
        }
    }
    Ok(TpBreakdown::from_counts(
        &pred.model,
        "",
        model_cwe,
        test_count,
        &counts,
        unattributed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cwe(v: u32) -> CweId {
        CweId::new(v).unwrap()
    }

    #[test]
    fn long_tail_counts() {
        let counts: BTreeMap<CweId, usize> = [
            (125, 137), (787, 52), (119, 46), (190, 31), (476, 29), (703, 21), (20, 21),
            (189, 15), (416, 13), (120, 13), (400, 60), (362, 57),
        ]
        .into_iter()
        .map(|(c, n)| (cwe(c), n))
        .collect();
        // The two smallest listed buckets fall into Rest once two larger ones exist.
        let b = TpBreakdown::from_counts("m_125", "d_test_all", Some(cwe(125)), 150, &counts, 0);
        assert_eq!(b.total_tp, 137 + 52 + 46 + 31 + 29 + 21 + 21 + 15 + 13 + 13 + 60 + 57);
        assert_eq!(b.top.len(), BREAKDOWN_TOP);
        assert_eq!(b.own_tp, 137);
        assert_eq!(b.rest, 13 + 13);
        assert_eq!(b.top.iter().map(|(_, n)| n).sum::<usize>() + b.rest, b.total_tp);
        assert_eq!(b.top[7], (cwe(20), 21));
        assert_eq!(b.top[8], (cwe(703), 21));
    }

    #[test]
    fn empty_breakdown() {
        let b = TpBreakdown::from_counts("m", "d", None, 0, &BTreeMap::new(), 3);
        assert_eq!(b.predictions_cell(), "Rest:3");
        assert_eq!(b.total_tp, 3);
    }
}
