//! Stratified splits and the disjoint balanced sets built from them.
//!
//! `cargo run --example split_manifests`

use cwevd::corpus::{generate_synthetic, SyntheticSpec};
use cwevd::split::{split_nonvulnerable, stratified_split_vulnerable, SetBuilder, SplitConfig};
use cwevd::CweId;

fn main() -> cwevd::Result<()> {
    let corpus = generate_synthetic(&SyntheticSpec::new(&[(125, 50), (787, 30)], 400, 3)?)?;
    let cfg = SplitConfig::new(1);
    let v = stratified_split_vulnerable(&corpus.vulnerable(), &cfg)?;
    let nv = split_nonvulnerable(&corpus.non_vulnerable(), &cfg)?;
    for (cwe, (train, test)) in &v.metadata.per_cwe {
        println!("{cwe}: train {train}, test {test}");
    }

    let cwes = [CweId::new(125)?, CweId::new(787)?];
    let mut builder = SetBuilder::new(&corpus, &v, &nv, cfg.seed)?;
    let sets = builder.build_rq1_sets(&cwes)?;
    for (_, train, test) in &sets.per_cwe {
        println!("{}: {} entries, {}: {} entries", train.name, train.len(), test.name, test.len());
    }
    println!("{}: {} entries", sets.train_balanced.name, sets.train_balanced.len());
    print!("{}", sets.test_balanced.to_manifest(cfg.seed, &corpus.digest()).to_json());
    Ok(())
}
