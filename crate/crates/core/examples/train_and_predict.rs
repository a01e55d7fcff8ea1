//! Train a hashed n-gram logistic model and score held-out records.
//!
//! `cargo run --example train_and_predict`

use cwevd::classify::{predict, train, Hyperparameters};
use cwevd::corpus::{generate_synthetic, SyntheticSpec};
use cwevd::split::{split_nonvulnerable, stratified_split_vulnerable, SetBuilder, SplitConfig};

fn main() -> cwevd::Result<()> {
    let corpus = generate_synthetic(&SyntheticSpec::new(&[(416, 120)], 400, 5)?)?;
    let cfg = SplitConfig::new(5);
    let v = stratified_split_vulnerable(&corpus.vulnerable(), &cfg)?;
    let nv = split_nonvulnerable(&corpus.non_vulnerable(), &cfg)?;
    let mut builder = SetBuilder::new(&corpus, &v, &nv, cfg.seed)?;
    let (train_set, test_set) = builder.build_balanced_binary_sets()?;

    let model = train(&train_set, &corpus, &Hyperparameters::default(), 42)?;
    println!("trained on {} records, final loss {:.4}", train_set.len(), model.metadata.final_loss);

    let pred = predict(&model, test_set.ids(), &corpus)?;
    for (id, vulnerable) in test_set.binary_truth().iter().take(6) {
        let p = pred.get(id).expect("predicted");
        println!("{id}: score {:.3} truth {vulnerable}", p.score().unwrap_or(0.0));
    }
    Ok(())
}
