//! Metrics over binary predictions.
//!
//! Confusion counts at a decision rule, the derived rates, VD-S (the lowest
//! false negative rate reachable while the false positive rate stays within a
//! tolerance `r`), true-positive breakdowns by CWE, pairwise metrics over
//! (vulnerable, fixed) pairs, and report rendering to JSON / CSV / text.

mod breakdown;
mod confusion;
mod pairwise;
mod report;
mod vds;

pub use breakdown::{tp_breakdown, TpBreakdown, BREAKDOWN_TOP};
pub use confusion::{
    confusion, confusion_at_threshold, derive_metrics, ConfusionCounts, Decision, Metrics,
};
pub use pairwise::{pairwise_eval, PairwiseReport};
pub use report::{
    csv_from_json, evaluate, format_fixed, metrics_csv, render_breakdown_table,
    render_metrics_table, render_pairwise_table, EvalMode, MetricsReport, Report, REPORT_SCHEMA,
};
pub use vds::{sweep, vd_score, vd_score_from_scores, SweepPoint, VdScore};
