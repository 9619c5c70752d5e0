use serde::{Deserialize, Serialize};

use super::{check_lengths, ConfusionCounts};
use crate::data::Label;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    /// A client's local data (training split for the per-client tables).
    ClientLocal,
    /// Pooled training and validation data across clients.
    PooledTrainValidation,
    /// Anything else, e.g. an external prediction file.
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub source: ThresholdSource,
    pub achieved_j: f64,
}

/// Candidate thresholds in ascending order: one below the minimum score,
/// the midpoints of consecutive unique scores, one above the maximum.
pub fn candidate_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut unique: Vec<f64> = scores.to_vec();
    unique.sort_by(f64::total_cmp);
    unique.dedup();
    let (Some(&lo), Some(&hi)) = (unique.first(), unique.last()) else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(unique.len() + 1);
    out.push(lo - 1.0);
    out.extend(unique.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.push(hi + 1.0);
    out
}

/// Threshold maximizing Youden's J over [`candidate_thresholds`]; ties go to
/// the smallest threshold.
pub fn optimize_threshold(
    scores: &[f64],
    labels: &[Label],
    source: ThresholdSource,
) -> Result<ThresholdChoice> {
    check_lengths(scores, labels)?;
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for (&s, l) in scores.iter().zip(labels) {
        if l.is_positive() {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::ThresholdUndefined(
            "need both classes to optimize a threshold".into(),
        ));
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    // Count of sorted values below t; everything from there on is >= t.
    let below = |v: &[f64], t: f64| v.partition_point(|&x| x < t);

    let mut best: Option<ThresholdChoice> = None;
    for t in candidate_thresholds(scores) {
        let (pb, nb) = (below(&pos, t), below(&neg, t));
        let counts = ConfusionCounts {
            tp: pos.len() - pb,
            fn_: pb,
            fp: neg.len() - nb,
            tn: nb,
        };
        let j = counts.youden_j();
        if best.is_none_or(|b| j > b.achieved_j) {
            best = Some(ThresholdChoice {
                threshold: t,
                source,
                achieved_j: j,
            });
        }
    }
    Ok(best.expect("candidate set is never empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label::{NoOverlap as N, Overlap as P};
    use crate::eval::confusion_at;

    #[test]
    fn four_point_example() {
        let s = [0.1, 0.4, 0.35, 0.8];
        let l = [N, N, P, P];
        assert_eq!(candidate_thresholds(&s).len(), 5);
        let c = optimize_threshold(&s, &l, ThresholdSource::External).unwrap();
        assert_eq!(c.achieved_j, 0.5);
        // J = 0.5 at both 0.225 and 0.6; the smaller one wins.
        assert!((c.threshold - 0.225).abs() < 1e-15);
        let at_06 = confusion_at(&s, &l, 0.6).unwrap().youden_j();
        assert_eq!(at_06, 0.5);
    }

    #[test]
    fn perfect_separation() {
        let c = optimize_threshold(&[0.1, 0.2, 0.7, 0.9], &[N, N, P, P], ThresholdSource::External)
            .unwrap();
        assert_eq!(c.achieved_j, 1.0);
        assert!(c.threshold > 0.2 && c.threshold <= 0.7);
    }

    #[test]
    fn single_class() {
        assert!(matches!(
            optimize_threshold(&[0.1, 0.2], &[N, N], ThresholdSource::External),
            Err(Error::ThresholdUndefined(_))
        ));
    }

    #[test]
    fn achieved_j_recomputes() {
        let s = [0.3, 0.1, 0.3, 0.9, 0.5, 0.5, 0.2, 0.05];
        let l = [P, N, N, P, N, P, N, P];
        let c = optimize_threshold(&s, &l, ThresholdSource::External).unwrap();
        assert_eq!(confusion_at(&s, &l, c.threshold).unwrap().youden_j(), c.achieved_j);
        for t in candidate_thresholds(&s) {
            assert!(confusion_at(&s, &l, t).unwrap().youden_j() <= c.achieved_j);
        }
    }
}
