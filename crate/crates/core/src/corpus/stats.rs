use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::record::{Corpus, CweId};

/// Lower edges of the 2nd..4th length buckets: `[0,4000)`, `[4000,8000)`,
/// `[8000,12000)`, `[12000,∞)`.
pub const LENGTH_BUCKET_EDGES: [usize; 3] = [4000, 8000, 12000];

const BUCKET_NAMES: [&str; 4] = ["l<4k", "4k<=l<8k", "8k<=l<12k", "l>=12k"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelBuckets {
    pub buckets: [usize; 4],
    pub total: usize,
}

impl LabelBuckets {
    fn add(&mut self, len: usize) {
        let bucket = LENGTH_BUCKET_EDGES
            .iter()
            .position(|&edge| len < edge)
            .unwrap_or(LENGTH_BUCKET_EDGES.len());
        self.buckets[bucket] += 1;
        self.total += 1;
    }
}

/// Per-label counts over the length buckets plus a per-length histogram.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthBucketReport {
    pub vulnerable: LabelBuckets,
    pub non_vulnerable: LabelBuckets,
    pub total: LabelBuckets,
    /// Share of all records per bucket, in percent. All zero for an empty corpus.
    pub percent: [f64; 4],
    /// `(length, count)` rows, ascending by length.
    pub histogram: Vec<(usize, usize)>,
}

pub fn corpus_stats(corpus: &Corpus) -> LengthBucketReport {
    let mut report = LengthBucketReport::default();
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for record in &corpus.records {
        let len = record.char_len();
        if record.is_vulnerable() {
            report.vulnerable.add(len);
        } else {
            report.non_vulnerable.add(len);
        }
        report.total.add(len);
        *hist.entry(len).or_default() += 1;
    }
    if report.total.total > 0 {
        let n = report.total.total as f64;
        for (pct, &count) in report.percent.iter_mut().zip(&report.total.buckets) {
            *pct = 100.0 * count as f64 / n;
        }
    }
    report.histogram = hist.into_iter().collect();
    report
}

impl LengthBucketReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,lt_4k,4k_8k,8k_12k,ge_12k,all\n");
        for (name, row) in [
            ("vulnerable", &self.vulnerable),
            ("non_vulnerable", &self.non_vulnerable),
            ("total", &self.total),
        ] {
            let b = row.buckets;
            let _ = writeln!(out, "{name},{},{},{},{},{}", b[0], b[1], b[2], b[3], row.total);
        }
        let p = self.percent;
        let all = if self.total.total > 0 { 100.0 } else { 0.0 };
        let _ = writeln!(
            out,
            "percent,{:.2},{:.2},{:.2},{:.2},{:.2}",
            p[0], p[1], p[2], p[3], all
        );
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("length,count\n");
        for (len, count) in &self.histogram {
            let _ = writeln!(out, "{len},{count}");
        }
        out
    }

    /// Human-readable table in the layout of a length-distribution summary.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<[String; 6]> = vec![[
            "Label".into(),
            BUCKET_NAMES[0].into(),
            BUCKET_NAMES[1].into(),
            BUCKET_NAMES[2].into(),
            BUCKET_NAMES[3].into(),
            "All".into(),
        ]];
        for (name, row) in [
            ("Vuln", &self.vulnerable),
            ("Non-Vuln", &self.non_vulnerable),
            ("Total", &self.total),
        ] {
            let b = row.buckets;
            rows.push([
                name.into(),
                b[0].to_string(),
                b[1].to_string(),
                b[2].to_string(),
                b[3].to_string(),
                row.total.to_string(),
            ]);
        }
        let p = self.percent;
        let all = if self.total.total > 0 { 100.0 } else { 0.0 };
        rows.push([
            "% Total".into(),
            format!("{:.2}", p[0]),
            format!("{:.2}", p[1]),
            format!("{:.2}", p[2]),
            format!("{:.2}", p[3]),
            format!("{all:.2}"),
        ]);
        crate::table::render(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), 1)
    }
}

/// CWE frequencies over vulnerable records, descending by count with ties
/// broken by ascending CWE id. A record tagged with several CWEs counts once
/// for each of them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CweDistribution {
    pub ranked: Vec<(CweId, usize)>,
}

pub fn cwe_distribution(corpus: &Corpus) -> CweDistribution {
    let mut counts: BTreeMap<CweId, usize> = BTreeMap::new();
    for record in corpus.records.iter().filter(|r| r.is_vulnerable()) {
        for &cwe in &record.cwes {
            *counts.entry(cwe).or_default() += 1;
        }
    }
    let mut ranked: Vec<(CweId, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    CweDistribution { ranked }
}

impl CweDistribution {
    pub fn top(&self, n: usize) -> &[(CweId, usize)] {
        &self.ranked[..n.min(self.ranked.len())]
    }

    /// The `n` least frequent CWEs, still in ranked (descending) order.
    pub fn bottom(&self, n: usize) -> &[(CweId, usize)] {
        &self.ranked[self.ranked.len().saturating_sub(n)..]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,cwe,count\n");
        for (i, (cwe, count)) in self.ranked.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", i + 1, cwe.get(), count);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FunctionRecord, Label};

    fn rec(code_len: usize, label: Label, cwes: &[u32]) -> FunctionRecord {
        FunctionRecord {
            id: format!("t:{code_len}:{}", cwes.len()),
            code: "x".repeat(code_len),
            label,
            cwes: cwes.iter().map(|&c| CweId::new(c).unwrap()).collect(),
            source: "t".into(),
            project: None,
            commit: None,
            pair_id: None,
        }
    }

    #[test]
    fn buckets_by_raw_length() {
        let c = Corpus::new(
            vec![rec(10, Label::Vulnerable, &[1]), rec(5000, Label::Vulnerable, &[1])],
            vec![],
        );
        let s = corpus_stats(&c);
        assert_eq!(s.vulnerable.buckets, [1, 1, 0, 0]);
        assert_eq!(s.total.total, 2);
        assert_eq!(s.percent, [50.0, 50.0, 0.0, 0.0]);
        assert_eq!(s.histogram, vec![(10, 1), (5000, 1)]);
    }

    #[test]
    fn bucket_edges() {
        let c = Corpus::new(
            [3999, 4000, 7999, 8000, 11999, 12000, 50000]
                .iter()
                .map(|&l| rec(l, Label::NonVulnerable, &[]))
                .collect(),
            vec![],
        );
        assert_eq!(corpus_stats(&c).non_vulnerable.buckets, [1, 2, 2, 2]);
    }

    #[test]
    fn empty_corpus_is_all_zero() {
        let s = corpus_stats(&Corpus::default());
        assert_eq!(s, LengthBucketReport::default());
        assert!(s.to_csv().contains("percent,0.00,0.00,0.00,0.00,0.00"));
    }

    #[test]
    fn large_corpus_totals_render() {
        let report = LengthBucketReport {
            vulnerable: LabelBuckets { buckets: [16955, 2768, 1071, 4230], total: 25024 },
            non_vulnerable: LabelBuckets { buckets: [295587, 11242, 2802, 5847], total: 315478 },
            total: LabelBuckets { buckets: [312542, 14010, 3873, 10077], total: 340502 },
            percent: [312542, 14010, 3873, 10077].map(|c| 100.0 * c as f64 / 340502.0),
            histogram: vec![],
        };
        let csv = report.to_csv();
        assert!(csv.contains("total,312542,14010,3873,10077,340502"));
        assert!(csv.contains("percent,91.79,4.11,1.14,2.96,100.00"));
        assert!(report.to_table().contains("% Total  |  91.79 |"));
    }

    #[test]
    fn multi_cwe_records_count_for_each() {
        let c = Corpus::new(
            vec![
                rec(1, Label::Vulnerable, &[125]),
                rec(2, Label::Vulnerable, &[125]),
                rec(3, Label::Vulnerable, &[787]),
                rec(4, Label::Vulnerable, &[20, 787]),
                rec(5, Label::NonVulnerable, &[]),
            ],
            vec![],
        );
        let d = cwe_distribution(&c);
        let ranked: Vec<(u32, usize)> = d.ranked.iter().map(|(c, n)| (c.get(), *n)).collect();
        assert_eq!(ranked, vec![(125, 2), (787, 2), (20, 1)]);
        assert_eq!(d.top(1).len(), 1);
        assert_eq!(d.bottom(2)[1].0.get(), 20);
        assert_eq!(d.bottom(10).len(), 3);
    }
}
