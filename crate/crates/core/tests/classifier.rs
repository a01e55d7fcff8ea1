//! End-to-end training behaviour on the synthetic corpus.

use cwevd::classify::{predict, train, Hyperparameters, ModelKind, Prediction};
use cwevd::corpus::Corpus;
use cwevd::experiment::{build_rq2, load_inputs, split_corpus, synthetic_config, Prepared};
use cwevd::split::{LabeledSet, Rq2Sets};

fn prepared() -> (Prepared, Rq2Sets) {
    let cfg = synthetic_config(1, std::path::Path::new("unused"));
    let corpus = load_inputs(&cfg).unwrap();
    let (v_split, nv_split) = split_corpus(&corpus, &cfg).unwrap();
    let prepared = Prepared {
        corpus,
        v_split,
        nv_split,
    };
    let sets = build_rq2(&prepared, &cfg).unwrap();
    (prepared, sets)
}

fn flipped(set: &LabeledSet) -> LabeledSet {
    let mut out = set.clone();
    for entry in &mut out.entries {
        entry.1 = 1 - entry.1;
    }
    out
}

#[test]
fn multiclass_beats_uniform_loss() {
    let (p, sets) = prepared();
    let hp = Hyperparameters::default();
    let m = train(&sets.train_multiclass, &p.corpus, &hp, 11).unwrap();
    assert_eq!(m.kind, ModelKind::Multiclass);
    assert_eq!(m.class_labels.len(), 6);
    assert!(m.metadata.final_loss < (6f64).ln(), "loss {}", m.metadata.final_loss);
    assert!(m.metadata.final_loss.is_finite());
}

#[test]
fn flipped_labels_mirror_scores() {
    let (p, sets) = prepared();
    let hp = Hyperparameters::default();
    let set = &sets.train_binary;
    let a = train(set, &p.corpus, &hp, 5).unwrap();
    let b = train(&flipped(set), &p.corpus, &hp, 5).unwrap();
    let ids: Vec<&str> = sets.test_rq2.ids().collect();
    let pa = predict(&a, ids.iter().copied(), &p.corpus).unwrap();
    let pb = predict(&b, ids.iter().copied(), &p.corpus).unwrap();
    for id in &ids {
        let (sa, sb) = (pa.get(id).unwrap().score().unwrap(), pb.get(id).unwrap().score().unwrap());
        assert!((sa + sb - 1.0).abs() < 1e-6, "{id}: {sa} + {sb}");
    }
}

#[test]
fn training_is_reproducible_and_seed_sensitive() {
    let (p, sets) = prepared();
    let hp = Hyperparameters::default();
    let a = train(&sets.train_binary, &p.corpus, &hp, 3).unwrap();
    let b = train(&sets.train_binary, &p.corpus, &hp, 3).unwrap();
    let c = train(&sets.train_binary, &p.corpus, &hp, 4).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_ne!(a.weights, c.weights);
}

#[test]
fn predictions_cover_requested_ids_only() {
    let (p, sets) = prepared();
    let m = train(&sets.train_binary, &p.corpus, &Hyperparameters::default(), 1).unwrap();
    let ids: Vec<&str> = sets.test_rq2.ids().take(7).collect();
    let pred = predict(&m, ids.iter().copied(), &p.corpus).unwrap();
    assert_eq!(pred.len(), 7);
    assert!(pred.entries.values().all(|x| matches!(x, Prediction::Binary { .. })));
    let missing = predict(&m, ["no-such-id"], &p.corpus);
    assert!(missing.is_err());
    let empty = predict(&m, std::iter::empty::<&str>(), &Corpus::default()).unwrap();
    assert!(empty.is_empty());
}
