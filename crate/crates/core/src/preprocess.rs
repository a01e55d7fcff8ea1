//! Normalization, content hashing, de-duplication and the length filter.
//!
//! The cleaned dataset keeps a record when its normalized text has not been
//! seen before (first occurrence in corpus order wins) and its raw length is
//! at most `max_len` characters. De-duplication runs before the filter.

use std::collections::{BTreeMap, HashMap};

use md5::{Digest, Md5};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};

pub const DEFAULT_MAX_LEN: usize = 4000;

/// Removes every space, tab, newline and carriage return. Nothing else changes.
pub fn normalize_function(code: &str) -> String {
    code.chars()
        .filter(|c| !matches!(c, ' ' | '\t' | '\n' | '\r'))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalizedDigest {
    pub record_id: String,
    /// 32 lowercase hex characters.
    pub digest: String,
}

/// MD5 of the UTF-8 bytes, lowercase hex. The input is hashed as given; call
/// [`normalize_function`] first.
pub fn content_hash(normalized: &str) -> String {
    hex::encode(Md5::digest(normalized.as_bytes()))
}

pub fn record_digests(corpus: &Corpus) -> Vec<NormalizedDigest> {
    corpus
        .records
        .iter()
        .map(|r| NormalizedDigest {
            record_id: r.id.clone(),
            digest: content_hash(&normalize_function(&r.code)),
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub input: usize,
    pub kept: usize,
    pub dropped: usize,
    /// Dropped records whose label disagrees with the kept first occurrence.
    pub label_conflicts: usize,
    /// Dropped records per source tag.
    pub by_source: BTreeMap<String, usize>,
}

/// Single pass in record order keeping the first record for each normalized
/// digest.
pub fn deduplicate(corpus: &Corpus) -> (Corpus, DedupReport) {
    let digests = record_digests(corpus);
    let mut seen: HashMap<&str, Label> = HashMap::with_capacity(digests.len());
    let mut report = DedupReport {
        input: corpus.len(),
        ..Default::default()
    };
    let mut kept = Vec::with_capacity(corpus.len());
    for (record, d) in corpus.records.iter().zip(&digests) {
        match seen.get(d.digest.as_str()) {
            None => {
                seen.insert(&d.digest, record.label);
                kept.push(record.clone());
            }
            Some(&first_label) => {
                report.dropped += 1;
                if first_label != record.label {
                    report.label_conflicts += 1;
                }
                *report.by_source.entry(record.source.clone()).or_default() += 1;
            }
        }
    }
    report.kept = kept.len();
    (Corpus::new(kept, corpus.provenance.clone()), report)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub vulnerable: usize,
    pub non_vulnerable: usize,
}

impl LabelCounts {
    fn add(&mut self, label: Label) {
        match label {
            Label::Vulnerable => self.vulnerable += 1,
            Label::NonVulnerable => self.non_vulnerable += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.vulnerable + self.non_vulnerable
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthFilterReport {
    pub max_len: usize,
    pub kept: LabelCounts,
    pub dropped: LabelCounts,
}

/// Keeps records whose raw code is at most `max_len` characters long
/// (boundary inclusive), preserving order.
pub fn filter_length(corpus: &Corpus, max_len: usize) -> (Corpus, LengthFilterReport) {
    let mut report = LengthFilterReport {
        max_len,
        ..Default::default()
    };
    let kept = corpus
        .records
        .iter()
        .filter(|r| {
            let keep = r.char_len() <= max_len;
            if keep {
                report.kept.add(r.label);
            } else {
                report.dropped.add(r.label);
            }
            keep
        })
        .cloned()
        .collect();
    (Corpus::new(kept, corpus.provenance.clone()), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CweId, FunctionRecord};

    fn rec(id: &str, code: &str, label: Label, source: &str) -> FunctionRecord {
        FunctionRecord {
            id: id.into(),
            code: code.into(),
            label,
            cwes: if label == Label::Vulnerable {
                vec![CweId::new(20).unwrap()]
            } else {
                vec![]
            },
            source: source.into(),
            project: None,
            commit: None,
            pair_id: None,
        }
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_function("int a ;\n"), "inta;");
        assert_eq!(normalize_function(""), "");
        assert_eq!(normalize_function("a\tb\r\nc"), "abc");
        // other whitespace (vertical tab, form feed, NBSP) is untouched
        assert_eq!(normalize_function("a\u{b}\u{c}\u{a0}b"), "a\u{b}\u{c}\u{a0}b");
    }

    #[test]
    fn md5_goldens() {
        // reference values computed with Python's hashlib
        assert_eq!(content_hash(""), "d41d8cd98f00b204e9800998ecf8427e");
        assert_eq!(content_hash("inta;"), "1872a785088e63694e9916a5db0f2ba7");
        assert_eq!(
            content_hash(&normalize_function("int f() {\n    return 0;\n}\n")),
            "615a62ec4f5e717ef2aa5ce3d75bf1e6"
        );
    }

    #[test]
    fn whitespace_variants_share_a_digest() {
        let a = content_hash(&normalize_function("int f(){\n  return 0;\n}"));
        let b = content_hash(&normalize_function("int f() {\r\n\treturn 0;\r\n}"));
        assert_eq!(a, b);
    }

    #[test]
    fn first_occurrence_kept() {
        let c = Corpus::new(
            vec![
                rec("a", "int f() {\n  return 1;\n}", Label::Vulnerable, "dv"),
                rec("b", "int f() {\n\treturn 1;\n}", Label::Vulnerable, "cf"),
                rec("c", "int g() {}", Label::NonVulnerable, "cf"),
            ],
            vec![],
        );
        let (d, report) = deduplicate(&c);
        let ids: Vec<&str> = d.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
        assert_eq!(report.dropped, 1);
        assert_eq!(report.by_source, BTreeMap::from([("cf".to_string(), 1)]));
        assert_eq!(report.label_conflicts, 0);
    }

    #[test]
    fn unique_corpus_unchanged_and_conflicts_counted() {
        let unique = Corpus::new(
            vec![rec("a", "x", Label::Vulnerable, "s"), rec("b", "y", Label::NonVulnerable, "s")],
            vec![],
        );
        assert_eq!(deduplicate(&unique).0, unique);

        let conflicting = Corpus::new(
            vec![rec("a", "x y", Label::Vulnerable, "s"), rec("b", "xy", Label::NonVulnerable, "t")],
            vec![],
        );
        let (d, report) = deduplicate(&conflicting);
        assert_eq!(d.len(), 1);
        assert_eq!(d.records[0].label, Label::Vulnerable);
        assert_eq!(report.label_conflicts, 1);
    }

    #[test]
    fn hundred_records_with_seventeen_variants() {
        let mut records = Vec::new();
        for i in 0..83 {
            records.push(rec(&format!("u{i}"), &format!("int f{i}(void) {{ return {i}; }}"), Label::NonVulnerable, "s"));
        }
        for j in 0..17 {
            let i = (j * 5) % 83;
            records.push(rec(
                &format!("d{j}"),
                &format!("int f{i}(void)\n{{\n\treturn {i};\n}}\n"),
                Label::NonVulnerable,
                "t",
            ));
        }
        let (d, report) = deduplicate(&Corpus::new(records, vec![]));
        assert_eq!((report.kept, report.dropped), (83, 17));
        assert!(d.records.iter().all(|r| r.id.starts_with('u')));
    }

    #[test]
    fn length_boundary_is_inclusive() {
        let c = Corpus::new(
            vec![
                rec("a", &"x".repeat(4000), Label::Vulnerable, "s"),
                rec("b", &"x".repeat(4001), Label::NonVulnerable, "s"),
                // multi-byte characters count once
                rec("c", &"é".repeat(4000), Label::NonVulnerable, "s"),
            ],
            vec![],
        );
        let (f, report) = filter_length(&c, DEFAULT_MAX_LEN);
        let ids: Vec<&str> = f.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
        assert_eq!(report.kept, LabelCounts { vulnerable: 1, non_vulnerable: 1 });
        assert_eq!(report.dropped, LabelCounts { vulnerable: 0, non_vulnerable: 1 });
    }
}
