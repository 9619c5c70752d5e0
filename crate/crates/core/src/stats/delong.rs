use serde::{Deserialize, Serialize};

use super::{two_sided_normal_p, TestResult};
use crate::data::Label;
use crate::{Error, Result};

/// Placement values of one model: `v10[i]` is the fraction of negatives
/// ranked below positive `i` (ties count 1/2), `v01[j]` the fraction of
/// positives ranked above negative `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Placements {
    pub v10: Vec<f64>,
    pub v01: Vec<f64>,
}

impl Placements {
    pub fn auc(&self) -> f64 {
        self.v10.iter().sum::<f64>() / self.v10.len() as f64
    }
}

/// Mid-ranks (1-based, ties averaged) of `values`.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Placement values from mid-ranks: a positive's rank among all examples
/// minus its rank among positives counts the negatives below it.
pub fn placement_values(scores: &[f64], labels: &[Label]) -> Placements {
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, l)| l.is_positive())
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, l)| !l.is_positive())
        .map(|(&s, _)| s)
        .collect();
    let (m, n) = (pos.len(), neg.len());
    let combined: Vec<f64> = pos.iter().chain(&neg).copied().collect();
    let all = midranks(&combined);
    let within_pos = midranks(&pos);
    let within_neg = midranks(&neg);
    let v10 = (0..m).map(|i| (all[i] - within_pos[i]) / n as f64).collect();
    let v01 = (0..n)
        .map(|j| 1.0 - (all[m + j] - within_neg[j]) / m as f64)
        .collect();
    Placements { v10, v01 }
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (n - 1.0)
}

/// Symmetric in its arguments: `cov_term(a, b) == cov_term(b, a)` bit for bit.
fn cov_term(a: &Placements, b: &Placements) -> f64 {
    let (m, n) = (a.v10.len() as f64, a.v01.len() as f64);
    let s10 = if a.v10.as_ptr() <= b.v10.as_ptr() {
        covariance(&a.v10, &b.v10)
    } else {
        covariance(&b.v10, &a.v10)
    };
    let s01 = if a.v01.as_ptr() <= b.v01.as_ptr() {
        covariance(&a.v01, &b.v01)
    } else {
        covariance(&b.v01, &a.v01)
    };
    s10 / m + s01 / n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelongResult {
    pub auc_a: f64,
    pub auc_b: f64,
    /// `(auc_a - auc_b) / se`.
    pub z: f64,
    pub p_value: f64,
    pub variance: f64,
    /// Zero variance with equal AUCs, reported as `z = 0, p = 1`.
    pub degenerate: bool,
}

impl DelongResult {
    pub fn to_test_result(&self, alpha: f64) -> TestResult {
        let mut r = TestResult::new("DeLong", self.z, self.p_value, alpha);
        r.degenerate = self.degenerate;
        r
    }
}

/// DeLong's test for two correlated ROC curves scored on the same examples.
pub fn delong_test(scores_a: &[f64], scores_b: &[f64], labels: &[Label]) -> Result<DelongResult> {
    if scores_a.len() != labels.len() || scores_b.len() != labels.len() {
        return Err(Error::InvalidInput(
            "score vectors and labels must have equal length".into(),
        ));
    }
    if scores_a.iter().chain(scores_b).any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let m = labels.iter().filter(|l| l.is_positive()).count();
    let n = labels.len() - m;
    if m < 2 || n < 2 {
        return Err(Error::AucUndefined(format!(
            "need at least two examples per class, got {m} positives and {n} negatives"
        )));
    }
    let pa = placement_values(scores_a, labels);
    let pb = placement_values(scores_b, labels);
    let (auc_a, auc_b) = (pa.auc(), pb.auc());
    let variance = (cov_term(&pa, &pa) + cov_term(&pb, &pb)) - 2.0 * cov_term(&pa, &pb);
    let diff = auc_a - auc_b;
    if variance <= 0.0 {
        if diff == 0.0 {
            return Ok(DelongResult {
                auc_a,
                auc_b,
                z: 0.0,
                p_value: 1.0,
                variance,
                degenerate: true,
            });
        }
        return Err(Error::DegenerateVariance(format!(
            "AUCs differ by {diff} but the difference has zero variance"
        )));
    }
    let z = diff / variance.sqrt();
    Ok(DelongResult {
        auc_a,
        auc_b,
        z,
        p_value: two_sided_normal_p(z),
        variance,
        degenerate: false,
    })
}
