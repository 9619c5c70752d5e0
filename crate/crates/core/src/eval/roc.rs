use serde::{Deserialize, Serialize};

use super::check_lengths;
use crate::data::Label;
use crate::{Error, Result};

/// A ROC operating point: predicting positive for `score >= threshold` gives
/// rates `(fpr, tpr)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    #[serde(with = "extended_f64")]
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// JSON has no infinities; the `+inf` threshold of the first ROC point is
/// written as the string `"inf"`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Points ordered from `(0, 0)` (threshold `+inf`) to `(1, 1)` (threshold at
/// the minimum score).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// The operating point reached at `threshold`: the last point whose
    /// threshold is `>= threshold`.
    pub fn point_at(&self, threshold: f64) -> RocPoint {
        self.points
            .iter()
            .rev()
            .find(|p| p.threshold >= threshold)
            .copied()
            .unwrap_or(self.points[0])
    }
}

/// ROC curve from the descending sweep over unique scores, and its area by
/// the trapezoidal rule.
///
/// The area is accumulated in integer counts and divided once at the end, so
/// it is exactly the Mann-Whitney statistic `P(s+ > s-) + P(s+ = s-)/2`.
pub fn roc_and_auc(scores: &[f64], labels: &[Label]) -> Result<(RocCurve, f64)> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::AucUndefined(format!(
            "need both classes, got {n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut twice_area: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (prev_tp, prev_fp) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += u128::from(fp - prev_fp) * u128::from(tp + prev_tp);
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    let auc = twice_area as f64 / (2 * n_pos as u128 * n_neg as u128) as f64;
    Ok((RocCurve { points }, auc))
}

pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    roc_and_auc(scores, labels).map(|(_, a)| a)
}
