use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DatasetSplit, Manifest};
use crate::corpus::{Corpus, CorpusIndex, CweId, FunctionRecord};
use crate::error::{Error, Result};
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Train,
    Test,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Train => "train",
            Side::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetKind {
    /// Labels 1 (vulnerable) / 0.
    Binary,
    /// Labels are the primary CWE id, or 0 for non-vulnerable. `classes`
    /// starts with 0.
    Multiclass { classes: Vec<u32> },
}

impl SetKind {
    pub fn classes(&self) -> Vec<u32> {
        match self {
            SetKind::Binary => vec![0, 1],
            SetKind::Multiclass { classes } => classes.clone(),
        }
    }
}

/// Record ids paired with training labels, in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSet {
    pub name: String,
    pub side: Side,
    pub kind: SetKind,
    pub entries: Vec<(String, u32)>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    /// Ground truth for binary evaluation: any non-zero label is vulnerable.
    pub fn binary_truth(&self) -> Vec<(String, bool)> {
        self.entries
            .iter()
            .map(|(id, label)| (id.clone(), *label != 0))
            .collect()
    }

    pub fn class_counts(&self) -> BTreeMap<u32, usize> {
        let mut counts = BTreeMap::new();
        for (_, label) in &self.entries {
            *counts.entry(*label).or_default() += 1;
        }
        counts
    }

    pub fn positives(&self) -> usize {
        self.entries.iter().filter(|(_, l)| *l != 0).count()
    }

    pub fn to_manifest(&self, seed: u64, corpus_digest: &str) -> Manifest {
        let ids: Vec<String> = self.entries.iter().map(|(id, _)| id.clone()).collect();
        let (train, test) = match self.side {
            Side::Train => (ids, Vec::new()),
            Side::Test => (Vec::new(), ids),
        };
        let mut counts: BTreeMap<String, usize> = self
            .class_counts()
            .into_iter()
            .map(|(label, n)| (format!("label.{label}"), n))
            .collect();
        counts.insert("total".into(), self.len());
        let mut notes = BTreeMap::from([("side".to_string(), self.side.as_str().to_string())]);
        if let SetKind::Multiclass { classes } = &self.kind {
            let joined: Vec<String> = classes.iter().map(u32::to_string).collect();
            notes.insert("classes".into(), joined.join(","));
        }
        Manifest {
            name: self.name.clone(),
            seed,
            corpus_digest: corpus_digest.to_string(),
            train,
            test,
            labels: self.entries.iter().cloned().collect(),
            counts,
            notes,
        }
    }

    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        let side = match m.notes.get("side").map(String::as_str) {
            Some("train") => Side::Train,
            Some("test") => Side::Test,
            None if m.test.is_empty() && !m.train.is_empty() => Side::Train,
            None => Side::Test,
            Some(other) => return Err(Error::Config(format!("unknown side {other:?}"))),
        };
        let kind = match m.notes.get("classes") {
            Some(list) => SetKind::Multiclass {
                classes: list
                    .split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<u32>()
                            .map_err(|_| Error::Config(format!("bad class label {c:?}")))
                    })
                    .collect::<Result<_>>()?,
            },
            None => SetKind::Binary,
        };
        let ids = match side {
            Side::Train => &m.train,
            Side::Test => &m.test,
        };
        let entries = ids
            .iter()
            .map(|id| {
                m.labels
                    .get(id)
                    .map(|&l| (id.clone(), l))
                    .ok_or_else(|| Error::Config(format!("manifest {}: no label for {id}", m.name)))
            })
            .collect::<Result<_>>()?;
        Ok(LabeledSet {
            name: m.name.clone(),
            side,
            kind,
            entries,
        })
    }
}

/// Ids still available for drawing on one side. Draws are without
/// replacement for the lifetime of the pool.
#[derive(Debug, Clone)]
struct Pool {
    name: &'static str,
    available: Vec<String>,
}

impl Pool {
    fn draw(&mut self, k: usize, seed: u64, set_name: &str) -> Result<Vec<String>> {
        if k > self.available.len() {
            return Err(Error::PoolExhausted {
                pool: self.name.to_string(),
                required: k,
                available: self.available.len(),
            });
        }
        let mut order: Vec<usize> = (0..self.available.len()).collect();
        let mut rng = rng_for(seed, "nvdraw", set_name);
        let (chosen, _) = order.partial_shuffle(&mut rng, k);
        let mut take = vec![false; self.available.len()];
        for &i in chosen.iter() {
            take[i] = true;
        }
        let mut drawn = Vec::with_capacity(k);
        let mut rest = Vec::with_capacity(self.available.len() - k);
        for (id, t) in self.available.drain(..).zip(take) {
            if t {
                drawn.push(id);
            } else {
                rest.push(id);
            }
        }
        self.available = rest;
        Ok(drawn)
    }
}

/// The sets of the CWE-specific vs. pooled-binary comparison.
#[derive(Debug, Clone)]
pub struct Rq1Sets {
    /// `(cwe, d_train_cwe, d_test_cwe)` in draw order.
    pub per_cwe: Vec<(CweId, LabeledSet, LabeledSet)>,
    pub train_balanced: LabeledSet,
    pub test_balanced: LabeledSet,
    pub test_all: LabeledSet,
    pub draw_order: Vec<String>,
}

/// The sets of the binary vs. multiclass comparison.
#[derive(Debug, Clone)]
pub struct Rq2Sets {
    pub train_binary: LabeledSet,
    /// Same membership and order as `train_binary`.
    pub train_multiclass: LabeledSet,
    pub test_rq2: LabeledSet,
    /// `(cwe, d_test_cwe)` in draw order.
    pub per_cwe_tests: Vec<(CweId, LabeledSet)>,
    pub draw_order: Vec<String>,
}

/// Builds labeled sets from one corpus and its two splits. A builder is one
/// experiment: every non-vulnerable id it hands out is removed from its pool.
pub struct SetBuilder<'a> {
    index: CorpusIndex<'a>,
    seed: u64,
    v_train: Vec<&'a FunctionRecord>,
    v_test: Vec<&'a FunctionRecord>,
    nv_test_all: Vec<String>,
    train_pool: Pool,
    test_pool: Pool,
    allow_empty: bool,
    draw_log: Vec<String>,
    /// |D_CWE| over both sides, for draw ordering.
    frequency: HashMap<CweId, usize>,
}

impl<'a> SetBuilder<'a> {
    pub fn new(
        corpus: &'a Corpus,
        v_split: &DatasetSplit,
        nv_split: &DatasetSplit,
        seed: u64,
    ) -> Result<Self> {
        let index = corpus.index();
        let v_train = index.resolve(v_split.train_ids.iter().map(String::as_str), "d_v_train")?;
        let v_test = index.resolve(v_split.test_ids.iter().map(String::as_str), "d_v_test")?;
        let nv_train = index.resolve(nv_split.train_ids.iter().map(String::as_str), "d_nv_train")?;
        let nv_test = index.resolve(nv_split.test_ids.iter().map(String::as_str), "d_nv_test")?;
        if let Some(r) = v_train.iter().chain(&v_test).find(|r| !r.is_vulnerable()) {
            return Err(Error::Config(format!("{} in vulnerable split is not vulnerable", r.id)));
        }
        if let Some(r) = nv_train.iter().chain(&nv_test).find(|r| r.is_vulnerable()) {
            return Err(Error::Config(format!("{} in non-vulnerable split is vulnerable", r.id)));
        }
        let mut frequency = HashMap::new();
        for r in v_train.iter().chain(&v_test) {
            if let Some(cwe) = r.primary_cwe() {
                *frequency.entry(cwe).or_default() += 1;
            }
        }
        let ids = |rs: &[&FunctionRecord]| rs.iter().map(|r| r.id.clone()).collect::<Vec<_>>();
        Ok(SetBuilder {
            seed,
            train_pool: Pool {
                name: "d_nv_train",
                available: ids(&nv_train),
            },
            test_pool: Pool {
                name: "d_nv_test",
                available: ids(&nv_test),
            },
            nv_test_all: ids(&nv_test),
            v_train,
            v_test,
            index,
            allow_empty: false,
            draw_log: Vec::new(),
            frequency,
        })
    }

    /// When set, a CWE with no samples on one side yields an empty set
    /// instead of an error.
    pub fn allow_empty(mut self, allow: bool) -> Self {
        self.allow_empty = allow;
        self
    }

    /// Names of the sets that drew from the pools, in order.
    pub fn draw_log(&self) -> &[String] {
        &self.draw_log
    }

    pub fn remaining(&self, side: Side) -> usize {
        match side {
            Side::Train => self.train_pool.available.len(),
            Side::Test => self.test_pool.available.len(),
        }
    }

    /// Descending by |D_CWE| (both sides), ties by ascending id.
    pub fn frequency_order(&self, cwes: &[CweId]) -> Vec<CweId> {
        let mut ordered = cwes.to_vec();
        ordered.dedup();
        ordered.sort_by(|a, b| {
            let fa = self.frequency.get(a).copied().unwrap_or(0);
            let fb = self.frequency.get(b).copied().unwrap_or(0);
            fb.cmp(&fa).then(a.cmp(b))
        });
        ordered.dedup();
        ordered
    }

    fn vulnerable(&self, side: Side) -> &[&'a FunctionRecord] {
        match side {
            Side::Train => &self.v_train,
            Side::Test => &self.v_test,
        }
    }

    fn balanced(
        &mut self,
        name: String,
        side: Side,
        vulnerable: Vec<(String, u32)>,
        kind: SetKind,
    ) -> Result<LabeledSet> {
        let pool = match side {
            Side::Train => &mut self.train_pool,
            Side::Test => &mut self.test_pool,
        };
        let drawn = pool.draw(vulnerable.len(), self.seed, &name)?;
        self.draw_log.push(name.clone());
        let mut entries = vulnerable;
        entries.extend(drawn.into_iter().map(|id| (id, 0)));
        Ok(LabeledSet {
            name,
            side,
            kind,
            entries,
        })
    }

    fn cwe_side(&mut self, cwe: CweId, side: Side) -> Result<LabeledSet> {
        let vulnerable: Vec<(String, u32)> = self
            .vulnerable(side)
            .iter()
            .filter(|r| r.primary_cwe() == Some(cwe))
            .map(|r| (r.id.clone(), 1))
            .collect();
        if vulnerable.is_empty() && !self.allow_empty {
            return Err(Error::EmptyCwe {
                cwe: cwe.get(),
                side: side.as_str().into(),
            });
        }
        let name = format!("d_{}_{}", side.as_str(), cwe.get());
        self.balanced(name, side, vulnerable, SetKind::Binary)
    }

    /// `d_train_CWE` / `d_test_CWE`: the CWE's vulnerable records from each
    /// side plus as many non-vulnerable records from the matching pool.
    pub fn build_cwe_specific_sets(&mut self, cwe: CweId) -> Result<(LabeledSet, LabeledSet)> {
        let train = self.cwe_side(cwe, Side::Train)?;
        let test = self.cwe_side(cwe, Side::Test)?;
        Ok((train, test))
    }

    /// Test side only; draws exactly as [`Self::build_cwe_specific_sets`]
    /// does on the test pool.
    pub fn build_cwe_specific_test_set(&mut self, cwe: CweId) -> Result<LabeledSet> {
        self.cwe_side(cwe, Side::Test)
    }

    /// `d_train_balanced` / `d_test_balanced`: every vulnerable record of the
    /// side plus as many non-vulnerable ones.
    pub fn build_balanced_binary_sets(&mut self) -> Result<(LabeledSet, LabeledSet)> {
        let mut out = Vec::with_capacity(2);
        for side in [Side::Train, Side::Test] {
            let vulnerable: Vec<(String, u32)> =
                self.vulnerable(side).iter().map(|r| (r.id.clone(), 1)).collect();
            if vulnerable.is_empty() {
                log::warn!("no vulnerable records on the {} side; balanced set is empty", side.as_str());
            }
            let name = format!("d_{}_balanced", side.as_str());
            out.push(self.balanced(name, side, vulnerable, SetKind::Binary)?);
        }
        let test = out.pop().expect("two sets");
        let train = out.pop().expect("two sets");
        Ok((train, test))
    }

    /// `d_test_all`: every test record, vulnerable or not. Draws nothing.
    pub fn test_all(&self) -> LabeledSet {
        let mut entries: Vec<(String, u32)> =
            self.v_test.iter().map(|r| (r.id.clone(), 1)).collect();
        entries.extend(self.nv_test_all.iter().map(|id| (id.clone(), 0)));
        LabeledSet {
            name: "d_test_all".into(),
            side: Side::Test,
            kind: SetKind::Binary,
            entries,
        }
    }

    /// CWE-specific sets in descending frequency order, then the pooled
    /// balanced sets from what remains.
    pub fn build_rq1_sets(&mut self, cwes: &[CweId]) -> Result<Rq1Sets> {
        let mut per_cwe = Vec::new();
        for cwe in self.frequency_order(cwes) {
            let (train, test) = self.build_cwe_specific_sets(cwe)?;
            per_cwe.push((cwe, train, test));
        }
        let (train_balanced, test_balanced) = self.build_balanced_binary_sets()?;
        Ok(Rq1Sets {
            per_cwe,
            train_balanced,
            test_balanced,
            test_all: self.test_all(),
            draw_order: self.draw_log.clone(),
        })
    }

    /// Per-CWE test sets (drawn exactly as in [`Self::build_rq1_sets`]), then
    /// the top-CWE training sets, then `d_test_rq2` = all of `d_nv_test` plus
    /// the top-CWE vulnerable test records.
    pub fn build_rq2_sets(&mut self, top_cwes: &[CweId]) -> Result<Rq2Sets> {
        if top_cwes.is_empty() {
            return Err(Error::Config("top_cwes must not be empty".into()));
        }
        let mut per_cwe_tests = Vec::new();
        for cwe in self.frequency_order(top_cwes) {
            per_cwe_tests.push((cwe, self.build_cwe_specific_test_set(cwe)?));
        }

        let in_top = |r: &FunctionRecord| r.primary_cwe().is_some_and(|c| top_cwes.contains(&c));
        let train_vuln: Vec<(String, u32)> = self
            .v_train
            .iter()
            .filter(|r| in_top(r))
            .map(|r| (r.id.clone(), r.primary_cwe().expect("filtered").get()))
            .collect();
        let classes: Vec<u32> = std::iter::once(0).chain(top_cwes.iter().map(|c| c.get())).collect();
        let train_multiclass = self.balanced(
            "d_train_rq2".into(),
            Side::Train,
            train_vuln,
            SetKind::Multiclass { classes },
        )?;
        let train_binary = LabeledSet {
            name: "d_train_rq2_binary".into(),
            side: Side::Train,
            kind: SetKind::Binary,
            entries: train_multiclass
                .entries
                .iter()
                .map(|(id, l)| (id.clone(), u32::from(*l != 0)))
                .collect(),
        };

        let mut test_entries: Vec<(String, u32)> = self
            .v_test
            .iter()
            .filter(|r| in_top(r))
            .map(|r| (r.id.clone(), 1))
            .collect();
        test_entries.extend(self.nv_test_all.iter().map(|id| (id.clone(), 0)));
        let test_rq2 = LabeledSet {
            name: "d_test_rq2".into(),
            side: Side::Test,
            kind: SetKind::Binary,
            entries: test_entries,
        };
        Ok(Rq2Sets {
            train_binary,
            train_multiclass,
            test_rq2,
            per_cwe_tests,
            draw_order: self.draw_log.clone(),
        })
    }

    pub fn index(&self) -> &CorpusIndex<'a> {
        &self.index
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::corpus::{generate_synthetic, SyntheticSpec};
    use crate::split::{split_nonvulnerable, stratified_split_vulnerable, SplitConfig};

    fn setup(counts: &[(u32, usize)], nv: usize) -> (Corpus, DatasetSplit, DatasetSplit) {
        let corpus = generate_synthetic(&SyntheticSpec::new(counts, nv, 11).unwrap()).unwrap();
        let cfg = SplitConfig::new(5);
        let v = stratified_split_vulnerable(&corpus.vulnerable(), &cfg).unwrap();
        let n = split_nonvulnerable(&corpus.non_vulnerable(), &cfg).unwrap();
        (corpus, v, n)
    }

    fn cwe(c: u32) -> CweId {
        CweId::new(c).unwrap()
    }

    #[test]
    fn cwe_specific_sets_are_balanced_and_disjoint() {
        let (corpus, v, n) = setup(&[(125, 150), (787, 40)], 1000);
        let mut b = SetBuilder::new(&corpus, &v, &n, 1).unwrap();
        let (tr125, te125) = b.build_cwe_specific_sets(cwe(125)).unwrap();
        let (tr787, te787) = b.build_cwe_specific_sets(cwe(787)).unwrap();
        assert_eq!(te125.len(), 30);
        assert_eq!(te125.class_counts(), BTreeMap::from([(0, 15), (1, 15)]));
        assert_eq!(tr125.class_counts(), BTreeMap::from([(0, 135), (1, 135)]));
        assert_eq!(tr787.len(), 72);
        assert_eq!(te787.len(), 8);

        let nv = |s: &LabeledSet| -> HashSet<String> {
            s.entries.iter().filter(|(_, l)| *l == 0).map(|(id, _)| id.clone()).collect()
        };
        assert!(nv(&tr125).is_disjoint(&nv(&tr787)));
        assert!(nv(&te125).is_disjoint(&nv(&te787)));
        assert_eq!(b.draw_log(), ["d_train_125", "d_test_125", "d_train_787", "d_test_787"]);
    }

    #[test]
    fn empty_cwe_is_fatal_unless_allowed() {
        let (corpus, v, n) = setup(&[(125, 1)], 50);
        let mut b = SetBuilder::new(&corpus, &v, &n, 1).unwrap();
        // a single record goes to test
        assert!(matches!(
            b.build_cwe_specific_sets(cwe(125)),
            Err(Error::EmptyCwe { cwe: 125, .. })
        ));
        let mut b = SetBuilder::new(&corpus, &v, &n, 1).unwrap().allow_empty(true);
        let (train, test) = b.build_cwe_specific_sets(cwe(125)).unwrap();
        assert!(train.is_empty());
        assert_eq!(test.len(), 2);
    }

    #[test]
    fn exhausted_pool_reports_counts() {
        let (corpus, v, n) = setup(&[(125, 100)], 50);
        let mut b = SetBuilder::new(&corpus, &v, &n, 1).unwrap();
        match b.build_cwe_specific_sets(cwe(125)) {
            Err(Error::PoolExhausted {
                pool,
                required,
                available,
            }) => {
                assert_eq!(pool, "d_nv_train");
                assert_eq!(required, 90);
                assert_eq!(available, 45);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn balanced_sets_use_every_vulnerable_record() {
        let (corpus, v, n) = setup(&[(125, 40), (20, 60)], 400);
        let mut b = SetBuilder::new(&corpus, &v, &n, 1).unwrap();
        let (train, test) = b.build_balanced_binary_sets().unwrap();
        assert_eq!(train.positives(), v.train_ids.len());
        assert_eq!(test.positives(), v.test_ids.len());
        assert_eq!(train.len(), 2 * v.train_ids.len());
        assert_eq!(test.len(), 2 * v.test_ids.len());
    }

    #[test]
    fn empty_vulnerable_side_gives_empty_balanced_sets() {
        let (corpus, v, n) = setup(&[], 30);
        let mut b = SetBuilder::new(&corpus, &v, &n, 1).unwrap();
        let (train, test) = b.build_balanced_binary_sets().unwrap();
        assert!(train.is_empty() && test.is_empty());
    }

    #[test]
    fn rq1_draw_order_follows_frequency() {
        let (corpus, v, n) = setup(&[(125, 20), (787, 60), (20, 40)], 1000);
        let mut b = SetBuilder::new(&corpus, &v, &n, 1).unwrap();
        let sets = b.build_rq1_sets(&[cwe(125), cwe(787), cwe(20)]).unwrap();
        let order: Vec<u32> = sets.per_cwe.iter().map(|(c, _, _)| c.get()).collect();
        assert_eq!(order, [787, 20, 125]);
        assert_eq!(sets.draw_order.last().unwrap(), "d_test_balanced");
        assert_eq!(sets.test_all.len(), v.test_ids.len() + n.test_ids.len());
    }

    #[test]
    fn rq2_excludes_other_cwes_and_matches_rq1_tests() {
        let (corpus, v, n) = setup(&[(125, 10), (787, 10), (89, 5)], 200);
        let top = [cwe(125), cwe(787)];
        let mut b1 = SetBuilder::new(&corpus, &v, &n, 4).unwrap();
        let rq1 = b1.build_rq1_sets(&top).unwrap();
        let mut b2 = SetBuilder::new(&corpus, &v, &n, 4).unwrap();
        let rq2 = b2.build_rq2_sets(&top).unwrap();

        let index = corpus.index();
        let primary = |id: &str| index.get(id).unwrap().primary_cwe();
        for (id, label) in &rq2.train_multiclass.entries {
            match label {
                0 => assert!(!index.get(id).unwrap().is_vulnerable()),
                l => assert_eq!(primary(id).unwrap().get(), *l),
            }
            assert_ne!(primary(id).map(CweId::get), Some(89));
        }
        assert!(rq2.test_rq2.entries.iter().all(|(id, _)| primary(id).map(CweId::get) != Some(89)));
        assert_eq!(rq2.test_rq2.positives(), 2);
        assert_eq!(rq2.train_multiclass.len(), 2 * 18);
        let binary_ids: Vec<&str> = rq2.train_binary.ids().collect();
        let multi_ids: Vec<&str> = rq2.train_multiclass.ids().collect();
        assert_eq!(binary_ids, multi_ids);

        for ((c1, _, t1), (c2, t2)) in rq1.per_cwe.iter().zip(&rq2.per_cwe_tests) {
            assert_eq!(c1, c2);
            assert_eq!(t1, t2);
        }
    }

    #[test]
    fn manifest_roundtrip() {
        let (corpus, v, n) = setup(&[(125, 10), (787, 10)], 100);
        let mut b = SetBuilder::new(&corpus, &v, &n, 4).unwrap();
        let rq2 = b.build_rq2_sets(&[cwe(125), cwe(787)]).unwrap();
        for set in [&rq2.train_multiclass, &rq2.train_binary, &rq2.test_rq2] {
            let m = set.to_manifest(4, "abc");
            let back: Manifest = serde_json::from_str(&m.to_json()).unwrap();
            assert_eq!(&LabeledSet::from_manifest(&back).unwrap(), set);
        }
        let m = v.to_manifest(1);
        assert_eq!(DatasetSplit::from_manifest(&m).unwrap(), v);
    }

    #[test]
    fn unknown_ids_in_splits_are_rejected() {
        let (corpus, mut v, n) = setup(&[(125, 10)], 20);
        v.train_ids.push("ghost".into());
        assert!(matches!(
            SetBuilder::new(&corpus, &v, &n, 1),
            Err(Error::UnknownIds { .. })
        ));
    }
}
