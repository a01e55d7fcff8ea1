//! CWE-specific classifiers against one pooled classifier, end to end, on a
//! synthetic corpus. Artifacts land in a temporary directory.
//!
//! `cargo run --release --example rq1_experiment`

use cwevd::eval::EvalMode;
use cwevd::experiment::{cmd_run_rq1, synthetic_config};

fn main() -> cwevd::Result<()> {
    let dir = std::env::temp_dir().join("cwevd-rq1-example");
    let mut cfg = synthetic_config(1, &dir);
    cfg.modes = vec![EvalMode::Hard];
    let report = cmd_run_rq1(&cfg)?;
    print!("{}", report.to_text());
    println!("artifacts in {}", dir.join("rq1").display());
    Ok(())
}
