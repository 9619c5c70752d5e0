use serde::{Deserialize, Serialize};

use super::check_lengths;
use crate::data::Label;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn n_pos(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn n_neg(&self) -> usize {
        self.tn + self.fp
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.n_pos())
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.n_neg())
    }

    /// Youden's J, `sensitivity - (1 - specificity)`, with undefined rates
    /// read as 0. Every J in the crate goes through here.
    pub fn youden_j(&self) -> f64 {
        self.sensitivity().unwrap_or(0.0) - (1.0 - self.specificity().unwrap_or(0.0))
    }
}

/// Prediction is positive iff `score >= threshold`.
pub fn confusion_at(scores: &[f64], labels: &[Label], threshold: f64) -> Result<ConfusionCounts> {
    check_lengths(scores, labels)?;
    let mut c = ConfusionCounts::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l.is_positive()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Metrics whose denominator was zero; they are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Degenerate {
    pub sensitivity: bool,
    pub specificity: bool,
    pub precision: bool,
    pub f1: bool,
}

impl Degenerate {
    pub fn any(&self) -> bool {
        self.sensitivity || self.specificity || self.precision || self.f1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f1: f64,
    pub balanced_accuracy: f64,
    pub youden_j: f64,
    pub auc: Option<f64>,
    pub threshold: Option<f64>,
    pub n_pos: usize,
    pub n_neg: usize,
    pub counts: ConfusionCounts,
    pub degenerate: Degenerate,
}

pub fn metrics_from(counts: ConfusionCounts) -> MetricReport {
    let mut degenerate = Degenerate::default();
    let sensitivity = counts.sensitivity().unwrap_or_else(|| {
        degenerate.sensitivity = true;
        0.0
    });
    let specificity = counts.specificity().unwrap_or_else(|| {
        degenerate.specificity = true;
        0.0
    });
    let precision = ratio(counts.tp, counts.tp + counts.fp).unwrap_or_else(|| {
        degenerate.precision = true;
        0.0
    });
    let f1 = if precision + sensitivity > 0.0 {
        2.0 * precision * sensitivity / (precision + sensitivity)
    } else {
        degenerate.f1 = true;
        0.0
    };
    MetricReport {
        accuracy: ratio(counts.tp + counts.tn, counts.total()).unwrap_or(0.0),
        sensitivity,
        specificity,
        precision,
        f1,
        balanced_accuracy: 0.5 * (sensitivity + specificity),
        youden_j: counts.youden_j(),
        auc: None,
        threshold: None,
        n_pos: counts.n_pos(),
        n_neg: counts.n_neg(),
        counts,
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label::{NoOverlap as N, Overlap as P};

    #[test]
    fn direct_count() {
        let c = confusion_at(&[0.9, 0.2, 0.6, 0.4], &[P, N, P, P], 0.5).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 2, fp: 0, tn: 1, fn_: 1 });
    }

    #[test]
    fn boundaries() {
        let s = [0.9, 0.2, 0.6, 0.4];
        let l = [P, N, P, N];
        let all = confusion_at(&s, &l, 0.0).unwrap();
        assert_eq!((all.fn_, all.tn), (0, 0));
        let at_min = confusion_at(&s, &l, 0.2).unwrap();
        assert_eq!((at_min.fn_, at_min.tn), (0, 0));
        let none = confusion_at(&s, &l, 0.9 + 1e-12).unwrap();
        assert_eq!((none.tp, none.fp), (0, 0));
    }

    #[test]
    fn length_mismatch() {
        assert!(confusion_at(&[0.1], &[P, N], 0.5).is_err());
    }

    #[test]
    fn hand_evaluated_metrics() {
        let r = metrics_from(ConfusionCounts { tp: 30, fn_: 10, tn: 45, fp: 15 });
        assert!((r.accuracy - 0.75).abs() < 1e-15);
        assert!((r.sensitivity - 0.75).abs() < 1e-15);
        assert!((r.specificity - 0.75).abs() < 1e-15);
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.f1 - 12.0 / 17.0).abs() < 1e-15);
        assert!((r.f1 - 0.70588).abs() < 1e-5);
        assert!((r.balanced_accuracy - 0.75).abs() < 1e-15);
        assert!((r.youden_j - 0.5).abs() < 1e-15);
        assert!(!r.degenerate.any());
    }

    #[test]
    fn no_positives_is_flagged() {
        let r = metrics_from(ConfusionCounts { tp: 0, fn_: 0, tn: 5, fp: 0 });
        assert_eq!(r.sensitivity, 0.0);
        assert!(r.degenerate.sensitivity);
        assert!(r.degenerate.precision);
        assert!(r.degenerate.f1);
    }

    #[test]
    fn perfect_classifier() {
        let r = metrics_from(ConfusionCounts { tp: 7, fn_: 0, tn: 3, fp: 0 });
        for v in [r.accuracy, r.sensitivity, r.specificity, r.precision, r.f1, r.balanced_accuracy, r.youden_j] {
            assert_eq!(v, 1.0);
        }
    }
}
