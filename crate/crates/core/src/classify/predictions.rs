use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Slack allowed on external probabilities before they are rejected.
const PROB_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionKind {
    Binary,
    Multiclass,
}

impl std::str::FromStr for PredictionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(PredictionKind::Binary),
            "multiclass" => Ok(PredictionKind::Multiclass),
            other => Err(Error::Config(format!("unknown prediction kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    /// `score` is P(vulnerable). `hard` overrides the `score >= 0.5` label,
    /// `argmax` keeps the winning class of a collapsed multiclass output.
    Binary {
        score: f64,
        hard: Option<bool>,
        argmax: Option<u32>,
    },
    /// Distribution in the owning set's `class_labels` order.
    Multiclass { dist: Vec<f64> },
}

impl Prediction {
    pub fn binary(score: f64) -> Self {
        Prediction::Binary {
            score,
            hard: None,
            argmax: None,
        }
    }

    pub fn score(&self) -> Option<f64> {
        match self {
            Prediction::Binary { score, .. } => Some(*score),
            Prediction::Multiclass { .. } => None,
        }
    }

    pub fn hard_label(&self) -> Option<bool> {
        match self {
            Prediction::Binary { score, hard, .. } => Some(hard.unwrap_or(*score >= 0.5)),
            Prediction::Multiclass { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub kind: PredictionKind,
    /// Binary: `[0, 1]`. Multiclass: `0` first, then CWE ids.
    pub class_labels: Vec<u32>,
    pub entries: BTreeMap<String, Prediction>,
    pub model: String,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Prediction> {
        self.entries.get(id)
    }

    pub fn require_binary(&self) -> Result<()> {
        match self.kind {
            PredictionKind::Binary => Ok(()),
            PredictionKind::Multiclass => Err(Error::PredictionKind(format!(
                "{} holds multiclass predictions; collapse them first",
                self.model
            ))),
        }
    }

    /// Ids from `ids` that have no prediction, in input order.
    pub fn missing<'a, I>(&self, ids: I) -> Vec<String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        ids.into_iter()
            .filter(|id| !self.entries.contains_key(*id))
            .map(str::to_string)
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (id, p) in &self.entries {
            let line = match p {
                Prediction::Binary { score, hard, argmax } => {
                    let mut obj = serde_json::json!({ "id": id, "score": score });
                    if let Some(h) = hard {
                        obj["label"] = Value::from(u8::from(*h));
                    }
                    if let Some(a) = argmax {
                        obj["argmax"] = Value::from(*a);
                    }
                    obj
                }
                Prediction::Multiclass { dist } => {
                    let map: serde_json::Map<String, Value> = self
                        .class_labels
                        .iter()
                        .zip(dist)
                        .map(|(c, p)| (c.to_string(), Value::from(*p)))
                        .collect();
                    serde_json::json!({ "id": id, "dist": map })
                }
            };
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::write(path, e))?;
        file.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::write(path, e))
    }
}

/// Binary view of a multiclass set: hard label 1 iff the argmax class is not
/// `0` (ties go to the earliest class), score `1 - P(0)`.
pub fn collapse_multiclass(pred: &PredictionSet) -> Result<PredictionSet> {
    if pred.kind != PredictionKind::Multiclass {
        return Err(Error::PredictionKind(format!("{} is not multiclass", pred.model)));
    }
    let zero = pred
        .class_labels
        .iter()
        .position(|&c| c == 0)
        .ok_or_else(|| Error::PredictionKind("multiclass labels lack class 0".into()))?;
    let entries = pred
        .entries
        .iter()
        .map(|(id, p)| {
            let dist = match p {
                Prediction::Multiclass { dist } => dist,
                Prediction::Binary { .. } => unreachable!("multiclass set holds binary entry"),
            };
            let mut best = 0;
            for (i, v) in dist.iter().enumerate() {
                if *v > dist[best] {
                    best = i;
                }
            }
            let argmax = pred.class_labels[best];
            let collapsed = Prediction::Binary {
                score: 1.0 - dist[zero],
                hard: Some(argmax != 0),
                argmax: Some(argmax),
            };
            (id.clone(), collapsed)
        })
        .collect();
    Ok(PredictionSet {
        kind: PredictionKind::Binary,
        class_labels: vec![0, 1],
        entries,
        model: format!("{}+collapsed", pred.model),
    })
}

fn check_probability(p: f64, line: usize, path: &Path) -> Result<f64> {
    let bad = |message: String| Error::BadLine {
        path: path.to_path_buf(),
        line,
        message,
    };
    if !(-PROB_TOLERANCE..=1.0 + PROB_TOLERANCE).contains(&p) {
        return Err(bad(format!("probability {p} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&p) {
        log::warn!("{}:{line}: clamping probability {p}", path.display());
    }
    Ok(p.clamp(0.0, 1.0))
}

enum Raw {
    Score(f64, Option<bool>),
    Dist(BTreeMap<u32, f64>),
}

/// Reads `{id, score[, label]}` or `{id, dist: {class: prob}}` JSONL.
///
/// With `kind == None` the kind is taken from the first record; mixing the
/// two shapes is an error. Multiclass classes are the union over all lines
/// (`0` first, then ascending); a class absent from a line has probability 0.
pub fn load_external_predictions(path: &Path, kind: Option<PredictionKind>) -> Result<PredictionSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::read(path, e))?;
    let bad = |line: usize, message: String| Error::BadLine {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut kind = kind;
    let mut raw: Vec<(usize, String, Raw)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::read(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| bad(n, e.to_string()))?;
        let id = match value.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(x)) => x.to_string(),
            _ => return Err(bad(n, "missing string `id`".into())),
        };
        if !seen.insert(id.clone()) {
            return Err(bad(n, format!("duplicate id {id:?}")));
        }
        let entry = if let Some(score) = value.get("score") {
            let s = score
                .as_f64()
                .ok_or_else(|| bad(n, format!("non-numeric score {score}")))?;
            let hard = match value.get("label") {
                None | Some(Value::Null) => None,
                Some(v) => match v.as_u64() {
                    Some(0) => Some(false),
                    Some(1) => Some(true),
                    _ => return Err(bad(n, format!("label must be 0 or 1, got {v}"))),
                },
            };
            Raw::Score(check_probability(s, n, path)?, hard)
        } else if let Some(dist) = value.get("dist") {
            let obj = dist
                .as_object()
                .ok_or_else(|| bad(n, "`dist` must be an object".into()))?;
            let mut map = BTreeMap::new();
            for (k, v) in obj {
                let class: u32 = k
                    .trim_start_matches("CWE-")
                    .parse()
                    .map_err(|_| bad(n, format!("class label {k:?} is not an integer")))?;
                let p = v
                    .as_f64()
                    .ok_or_else(|| bad(n, format!("non-numeric probability {v}")))?;
                map.insert(class, check_probability(p, n, path)?);
            }
            let total: f64 = map.values().sum();
            if (total - 1.0).abs() > PROB_TOLERANCE {
                return Err(bad(n, format!("distribution sums to {total}")));
            }
            for p in map.values_mut() {
                *p /= total;
            }
            Raw::Dist(map)
        } else {
            return Err(bad(n, "expected `score` or `dist`".into()));
        };
        let this = match entry {
            Raw::Score(..) => PredictionKind::Binary,
            Raw::Dist(_) => PredictionKind::Multiclass,
        };
        match kind {
            None => kind = Some(this),
            Some(k) if k != this => {
                return Err(bad(n, format!("expected {k:?} prediction, found {this:?}")));
            }
            _ => {}
        }
        raw.push((n, id, entry));
    }

    let kind = kind.unwrap_or(PredictionKind::Binary);
    let model = format!("external:{}", path.display());
    match kind {
        PredictionKind::Binary => {
            let entries = raw
                .into_iter()
                .map(|(_, id, r)| match r {
                    Raw::Score(score, hard) => (id, Prediction::Binary { score, hard, argmax: None }),
                    Raw::Dist(_) => unreachable!(),
                })
                .collect();
            Ok(PredictionSet {
                kind,
                class_labels: vec![0, 1],
                entries,
                model,
            })
        }
        PredictionKind::Multiclass => {
            let mut classes: Vec<u32> = raw
                .iter()
                .flat_map(|(_, _, r)| match r {
                    Raw::Dist(m) => m.keys().copied().collect::<Vec<_>>(),
                    Raw::Score(..) => vec![],
                })
                .collect();
            classes.sort_unstable();
            classes.dedup();
            if classes.first() != Some(&0) {
                return Err(Error::PredictionKind(format!(
                    "{}: multiclass predictions never mention class 0",
                    path.display()
                )));
            }
            let entries = raw
                .into_iter()
                .map(|(_, id, r)| match r {
                    Raw::Dist(m) => {
                        let dist = classes.iter().map(|c| m.get(c).copied().unwrap_or(0.0)).collect();
                        (id, Prediction::Multiclass { dist })
                    }
                    Raw::Score(..) => unreachable!(),
                })
                .collect();
            Ok(PredictionSet {
                kind,
                class_labels: classes,
                entries,
                model,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn multiclass(classes: &[u32], dists: &[(&str, &[f64])]) -> PredictionSet {
        PredictionSet {
            kind: PredictionKind::Multiclass,
            class_labels: classes.to_vec(),
            entries: dists
                .iter()
                .map(|(id, d)| (id.to_string(), Prediction::Multiclass { dist: d.to_vec() }))
                .collect(),
            model: "m".into(),
        }
    }

    #[test]
    fn collapse_examples() {
        let set = multiclass(
            &[0, 125, 787],
            &[("a", &[0.7, 0.2, 0.1]), ("b", &[0.2, 0.5, 0.3])],
        );
        let c = collapse_multiclass(&set).unwrap();
        let a = &c.entries["a"];
        assert_eq!(a.hard_label(), Some(false));
        assert_eq!(a.score(), Some(1.0 - 0.7));
        let b = &c.entries["b"];
        assert_eq!(b.hard_label(), Some(true));
        assert_eq!(b.score(), Some(1.0 - 0.2));
    }

    #[test]
    fn collapse_tie_goes_to_first_class() {
        let u = 1.0 / 6.0;
        let set = multiclass(&[0, 125, 787, 119, 20, 416], &[("u", &[u; 6])]);
        let c = collapse_multiclass(&set).unwrap();
        match &c.entries["u"] {
            Prediction::Binary { score, hard, argmax } => {
                assert_eq!(*hard, Some(false));
                assert_eq!(*argmax, Some(0));
                assert!((score - 5.0 / 6.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(collapse_multiclass(&c).is_err());
    }

    fn load(text: &str) -> Result<PredictionSet> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        std::fs::write(&path, text).unwrap();
        load_external_predictions(&path, None)
    }

    #[test]
    fn loads_binary_and_multiclass() {
        let b = load("{\"id\":\"a\",\"score\":0.9}\n\n{\"id\":\"b\",\"score\":0.1,\"label\":1}\n").unwrap();
        assert_eq!(b.kind, PredictionKind::Binary);
        assert_eq!(b.entries["a"].score(), Some(0.9));
        assert_eq!(b.entries["b"].hard_label(), Some(true));

        let m = load("{\"id\":\"a\",\"dist\":{\"0\":0.5,\"125\":0.5}}\n{\"id\":\"b\",\"dist\":{\"0\":1.0}}\n").unwrap();
        assert_eq!(m.class_labels, [0, 125]);
        assert_eq!(m.entries["b"], Prediction::Multiclass { dist: vec![1.0, 0.0] });
    }

    #[test]
    fn rejects_bad_lines_with_line_numbers() {
        let line_of = |r: Result<PredictionSet>| match r {
            Err(Error::BadLine { line, .. }) => line,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(line_of(load("{\"id\":\"a\",\"score\":0.9}\n{\"id\":\"b\",\"score\":1.2}\n")), 2);
        assert_eq!(line_of(load("{\"score\":0.2}\n")), 1);
        assert_eq!(line_of(load("{\"id\":\"a\",\"score\":\"high\"}\n")), 1);
        assert_eq!(line_of(load("{\"id\":\"a\",\"dist\":{\"0\":0.5,\"125\":0.4}}\n")), 1);
        assert_eq!(line_of(load("{\"id\":\"a\",\"score\":0.5}\n{\"id\":\"a\",\"score\":0.5}\n")), 2);
        assert_eq!(line_of(load("{\"id\":\"a\",\"score\":0.5}\n{\"id\":\"b\",\"dist\":{\"0\":1}}\n")), 2);
    }

    #[test]
    fn tolerates_tiny_excursions() {
        let b = load("{\"id\":\"a\",\"score\":1.0000005}\n").unwrap();
        assert_eq!(b.entries["a"].score(), Some(1.0));
        let m = load("{\"id\":\"a\",\"dist\":{\"0\":0.5000004,\"7\":0.5}}\n").unwrap();
        match &m.entries["a"] {
            Prediction::Multiclass { dist } => assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jsonl_roundtrip() {
        let set = multiclass(&[0, 125], &[("a", &[0.25, 0.75])]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        set.write_jsonl(&path).unwrap();
        let back = load_external_predictions(&path, Some(PredictionKind::Multiclass)).unwrap();
        assert_eq!(back.entries, set.entries);
        let collapsed = collapse_multiclass(&set).unwrap();
        collapsed.write_jsonl(&path).unwrap();
        let back = load_external_predictions(&path, None).unwrap();
        assert_eq!(back.entries["a"].hard_label(), Some(true));
    }
}
