//! Evaluate predictions produced by another tool, given as JSONL with either
//! a `score` or a class distribution per record.
//!
//! `cargo run --example evaluate_external`

use cwevd::classify::{collapse_multiclass, load_external_predictions};
use cwevd::eval::{evaluate, EvalMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("cwevd-external-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("dist.jsonl");
    let lines = [
        r#"{"id":"a","dist":{"0":0.1,"125":0.7,"787":0.2}}"#,
        r#"{"id":"b","dist":{"0":0.6,"125":0.3,"787":0.1}}"#,
        r#"{"id":"c","dist":{"0":0.3,"125":0.3,"787":0.4}}"#,
        r#"{"id":"d","dist":{"0":0.9,"125":0.05,"787":0.05}}"#,
    ];
    std::fs::write(&path, lines.join("\n"))?;

    let multi = load_external_predictions(&path, None)?;
    let binary = collapse_multiclass(&multi)?;
    let truth: Vec<(String, bool)> =
        [("a", true), ("b", false), ("c", true), ("d", false)].map(|(id, y)| (id.to_string(), y)).to_vec();
    for mode in [EvalMode::Hard, EvalMode::Score] {
        let m = evaluate(&binary, &truth, "toy", 0.5, mode)?;
        println!("{}: acc {:.2} f1 {:.2} VD-S {:.2}", mode.as_str(), m.acc, m.f1, m.vd_s);
    }
    Ok(())
}
