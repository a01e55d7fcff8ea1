//! Pair-level outcomes for (vulnerable, fixed) function pairs.
//!
//! `cargo run --example pairwise_eval`

use std::collections::BTreeMap;

use cwevd::classify::{Prediction, PredictionKind, PredictionSet};
use cwevd::eval::{pairwise_eval, Decision};

fn main() -> cwevd::Result<()> {
    let scores = [
        ("v1", 0.9), ("b1", 0.2), // correct
        ("v2", 0.8), ("b2", 0.7), // both flagged
        ("v3", 0.3), ("b3", 0.1), // both cleared
        ("v4", 0.2), ("b4", 0.6), // reversed
    ];
    let entries: BTreeMap<String, Prediction> =
        scores.iter().map(|(id, s)| (id.to_string(), Prediction::binary(*s))).collect();
    let pred = PredictionSet {
        kind: PredictionKind::Binary,
        class_labels: vec![0, 1],
        entries,
        model: "demo".into(),
    };
    let pairs: Vec<(String, String)> = (1..=4).map(|i| (format!("v{i}"), format!("b{i}"))).collect();
    let r = pairwise_eval(&pred, &pairs, Decision::Threshold(0.5))?;
    println!("P-C {:.2}  P-V {:.2}  P-B {:.2}  P-R {:.2}", r.p_c, r.p_v, r.p_b, r.p_r);
    Ok(())
}
