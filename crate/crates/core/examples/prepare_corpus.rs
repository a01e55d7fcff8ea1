//! Generate a synthetic corpus, then deduplicate, length-filter and
//! summarise it.
//!
//! `cargo run --example prepare_corpus`

use cwevd::corpus::{corpus_stats, cwe_distribution, generate_synthetic, SyntheticSpec};
use cwevd::preprocess::{deduplicate, filter_length, DEFAULT_MAX_LEN};

fn main() -> cwevd::Result<()> {
    let spec = SyntheticSpec::new(&[(125, 60), (787, 40), (20, 25)], 300, 7)?;
    let corpus = generate_synthetic(&spec)?;
    let (deduped, dedup) = deduplicate(&corpus);
    let (kept, lengths) = filter_length(&deduped, DEFAULT_MAX_LEN);
    println!(
        "{} records, {} duplicates dropped, {} over {} chars dropped",
        dedup.input,
        dedup.dropped,
        lengths.dropped.total(),
        lengths.max_len
    );
    print!("{}", corpus_stats(&kept).to_table());
    for (cwe, n) in cwe_distribution(&kept).top(3) {
        println!("{cwe}: {n}");
    }
    Ok(())
}
