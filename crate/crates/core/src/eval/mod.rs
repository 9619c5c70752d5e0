//! Binary classification metrics, ROC/AUC, Youden-J threshold selection and
//! the two-level (per-client / pooled-test) evaluation protocol.

mod confusion;
mod protocol;
mod roc;
mod threshold;

pub use confusion::{confusion_at, metrics_from, ConfusionCounts, Degenerate, MetricReport};
pub use protocol::{
    evaluate_at, score_dataset, two_level_evaluate, EvalRow, Evaluation, ModelSet,
};
pub use roc::{auc, roc_and_auc, RocCurve, RocPoint};
pub use threshold::{candidate_thresholds, optimize_threshold, ThresholdChoice, ThresholdSource};

use crate::data::Label;
use crate::{Error, Result};

pub(crate) fn check_lengths(scores: &[f64], labels: &[Label]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no scores".into()));
    }
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    Ok(())
}
