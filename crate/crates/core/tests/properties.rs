//! Property tests over the evaluation and feature layers.

use std::collections::BTreeMap;

use cwevd::classify::{featurize, tokenize, Prediction, PredictionKind, PredictionSet};
use cwevd::eval::{derive_metrics, pairwise_eval, vd_score_from_scores, ConfusionCounts, Decision};
use proptest::prelude::*;

fn scored() -> impl Strategy<Value = Vec<(f64, bool)>> {
    prop::collection::vec(((0u32..=20).prop_map(|k| f64::from(k) / 20.0), any::<bool>()), 0..40)
}

proptest! {
    #[test]
    fn vds_never_increases_with_tolerance(scores in scored(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let strict = vd_score_from_scores(&scores, lo);
        let loose = vd_score_from_scores(&scores, hi);
        prop_assert!(loose.vd_s <= strict.vd_s);
    }

    #[test]
    fn vds_operating_point_is_feasible(scores in scored(), r in 0.0f64..=1.0) {
        let v = vd_score_from_scores(&scores, r);
        prop_assert!(v.fpr <= r);
        prop_assert!((0.0..=1.0).contains(&v.vd_s));
        prop_assert_eq!(v.vd_s, v.fnr);
    }

    #[test]
    fn vds_is_invariant_to_input_order(mut scores in scored(), r in 0.0f64..=1.0) {
        let before = vd_score_from_scores(&scores, r);
        scores.reverse();
        let after = vd_score_from_scores(&scores, r);
        prop_assert_eq!(before.vd_s, after.vd_s);
        prop_assert_eq!(before.threshold, after.threshold);
    }

    #[test]
    fn metric_identities(tp in 0u64..500, tn in 0u64..500, fp in 0u64..500, fn_ in 0u64..500) {
        let m = derive_metrics(&ConfusionCounts::new(tp, tn, fp, fn_));
        let total = tp + tn + fp + fn_;
        if total > 0 {
            prop_assert!((m.acc - (tp + tn) as f64 / total as f64).abs() < 1e-12);
        }
        if tp > 0 {
            let f1 = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
            prop_assert!((m.f1 - f1).abs() < 1e-12);
        }
        for x in [m.acc, m.f1, m.precision, m.recall, m.fpr] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        prop_assert_eq!(m.degenerate.contains(&"recall".to_string()), tp + fn_ == 0);
        prop_assert_eq!(m.degenerate.contains(&"fpr".to_string()), fp + tn == 0);
    }

    #[test]
    fn pairwise_buckets_partition(flags in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
        let mut entries = BTreeMap::new();
        let mut pairs = Vec::new();
        for (i, (v, b)) in flags.iter().enumerate() {
            let (vid, bid) = (format!("v{i}"), format!("b{i}"));
            entries.insert(vid.clone(), Prediction::binary(if *v { 0.9 } else { 0.1 }));
            entries.insert(bid.clone(), Prediction::binary(if *b { 0.9 } else { 0.1 }));
            pairs.push((vid, bid));
        }
        let pred = PredictionSet {
            kind: PredictionKind::Binary,
            class_labels: vec![0, 1],
            entries,
            model: "p".into(),
        };
        let r = pairwise_eval(&pred, &pairs, Decision::Hard).unwrap();
        prop_assert_eq!(r.counts.iter().sum::<u64>(), flags.len() as u64);
        let correct = flags.iter().filter(|(v, b)| *v && !*b).count() as u64;
        prop_assert_eq!(r.counts[0], correct);
        prop_assert!((r.p_c + r.p_v + r.p_b + r.p_r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn features_are_unit_norm_or_empty(code in "[a-z0-9 (){};=+*/\n\t]{0,200}") {
        let tokens = tokenize(&code);
        let f = featurize(&tokens, 1 << 10);
        if tokens.is_empty() {
            prop_assert!(f.entries.is_empty());
        } else {
            prop_assert!((f.norm() - 1.0).abs() < 1e-9);
        }
        prop_assert!(f.entries.windows(2).all(|w| w[0].0 < w[1].0));
        prop_assert!(f.entries.iter().all(|(i, _)| (*i as usize) < f.dim));
    }

    #[test]
    fn tokenizer_ignores_layout(words in prop::collection::vec("[a-z_][a-z0-9_]{0,6}|[0-9]{1,4}|[(){};,]", 0..30)) {
        let spaced = words.join(" ");
        let laid_out = words.join("\n\t ");
        prop_assert_eq!(tokenize(&spaced), tokenize(&laid_out));
        prop_assert_eq!(tokenize(&spaced).tokens, words);
    }
}
