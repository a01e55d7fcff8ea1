//! Threshold sweep and the FNR at a bounded false-positive rate.
//!
//! `cargo run --example vds_sweep`

use cwevd::eval::vd_score_from_scores;

fn main() {
    let scores = [
        (0.95, true),
        (0.9, false),
        (0.8, true),
        (0.7, true),
        (0.6, false),
        (0.4, true),
        (0.3, false),
        (0.1, false),
    ];
    for r in [0.0, 0.25, 0.5, 1.0] {
        let v = vd_score_from_scores(&scores, r);
        let t = v.threshold.map_or("+inf".to_string(), |t| t.to_string());
        println!("r = {r:<4}  VD-S = {:.4}  threshold {t}  FPR {:.2}", v.vd_s, v.fpr);
    }
}
