//! Binary against multiclass classification, with the multiclass output
//! collapsed to a vulnerability score before evaluation.
//!
//! `cargo run --release --example rq2_multiclass`

use cwevd::eval::EvalMode;
use cwevd::experiment::{cmd_run_rq2, synthetic_config};

fn main() -> cwevd::Result<()> {
    let dir = std::env::temp_dir().join("cwevd-rq2-example");
    let mut cfg = synthetic_config(1, &dir);
    cfg.modes = vec![EvalMode::Hard, EvalMode::Score];
    let report = cmd_run_rq2(&cfg)?;
    print!("{}", report.to_text());
    Ok(())
}
