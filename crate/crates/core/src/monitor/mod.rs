//! Server-side diagnostics built only from what a federated server sees:
//! parameter deltas, scalar losses/accuracies and per-client J-curves.
//!
//! Nothing here accepts a dataset except [`compute_j_curve`], which runs on
//! the client and returns scalars only.

mod jcurve;
mod updates;

pub use jcurve::{aggregate_thresholds, compute_j_curve, AggregatedThreshold, AggregationRule, JCurve, ThresholdGrid};
pub use updates::{
    flag_outlier_clients, robust_z_scores, summarize_round, OutlierFlag, OutlierPolicy, RoundSummary, Signal,
    SimilarityMatrix, UpdateSummary,
};
