use serde::{Deserialize, Serialize};

use super::{two_sided_normal_p, TestResult};
use crate::{Error, Result};

/// Largest number of non-zero differences for which the exact null
/// distribution is computed; above it the normal approximation is used.
pub const EXACT_MAX_PAIRS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs supplied.
    pub n_pairs: usize,
    /// Pairs left after dropping zero differences.
    pub n_used: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub p_value: f64,
    pub exact: bool,
}

impl WilcoxonResult {
    pub fn to_test_result(&self, alpha: f64) -> TestResult {
        TestResult::new("Wilcoxon", self.statistic, self.p_value, alpha)
    }
}

/// Non-zero differences and their doubled mid-ranks (integers even with ties).
struct Ranked {
    doubled_ranks: Vec<u64>,
    positive: Vec<bool>,
    abs: Vec<f64>,
}

fn rank_differences(pairs: &[(f64, f64)]) -> Result<Ranked> {
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::InvalidInput("non-finite AUC in paired samples".into()));
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(Error::NoInformation(
            "all paired differences are zero".into(),
        ));
    }
    if diffs.len() < 2 {
        return Err(Error::NotEnoughData(
            "need at least two non-zero paired differences".into(),
        ));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&a, &b| abs[a].total_cmp(&abs[b]));
    let mut doubled_ranks = vec![0u64; abs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && abs[order[j + 1]] == abs[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            doubled_ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    Ok(Ranked {
        doubled_ranks,
        positive: diffs.iter().map(|d| *d > 0.0).collect(),
        abs,
    })
}

impl Ranked {
    fn doubled_w(&self) -> (u64, u64) {
        let plus = self
            .doubled_ranks
            .iter()
            .zip(&self.positive)
            .filter(|(_, p)| **p)
            .map(|(r, _)| r)
            .sum::<u64>();
        let total: u64 = self.doubled_ranks.iter().sum();
        (plus, total - plus)
    }

    fn result(&self, n_pairs: usize, p_value: f64, exact: bool) -> WilcoxonResult {
        let (plus, minus) = self.doubled_w();
        WilcoxonResult {
            n_pairs,
            n_used: self.doubled_ranks.len(),
            w_plus: plus as f64 / 2.0,
            w_minus: minus as f64 / 2.0,
            statistic: plus.min(minus) as f64 / 2.0,
            p_value,
            exact,
        }
    }

    /// Exact two-sided p from the subset-sum distribution of doubled ranks.
    fn exact_p(&self) -> f64 {
        let (plus, minus) = self.doubled_w();
        let w = plus.min(minus) as usize;
        let total: usize = self.doubled_ranks.iter().sum::<u64>() as usize;
        let mut ways = vec![0u64; total + 1];
        ways[0] = 1;
        for &r in &self.doubled_ranks {
            let r = r as usize;
            for s in (r..=total).rev() {
                ways[s] += ways[s - r];
            }
        }
        let at_most: u64 = ways[..=w].iter().sum();
        let k = self.doubled_ranks.len() as i32;
        (2.0 * at_most as f64 / 2f64.powi(k)).min(1.0)
    }

    fn normal_p(&self) -> f64 {
        let (plus, minus) = self.doubled_w();
        let k = self.doubled_ranks.len() as f64;
        let mean = k * (k + 1.0) / 4.0;
        let mut tie_term = 0.0;
        let mut sorted = self.abs.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let var = k * (k + 1.0) * (2.0 * k + 1.0) / 24.0 - tie_term / 48.0;
        if var <= 0.0 {
            return 1.0;
        }
        let w = plus.min(minus) as f64 / 2.0;
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        two_sided_normal_p(z)
    }
}

/// Paired Wilcoxon signed-rank test on `(a, b)` pairs; differences are
/// `a - b` and zeros are dropped before ranking. Exact for up to
/// [`EXACT_MAX_PAIRS`] non-zero differences.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult> {
    let ranked = rank_differences(pairs)?;
    if ranked.doubled_ranks.len() <= EXACT_MAX_PAIRS {
        Ok(ranked.result(pairs.len(), ranked.exact_p(), true))
    } else {
        Ok(ranked.result(pairs.len(), ranked.normal_p(), false))
    }
}

/// Normal approximation with tie and continuity corrections, at any size.
pub fn wilcoxon_normal_approx(pairs: &[(f64, f64)]) -> Result<WilcoxonResult> {
    let ranked = rank_differences(pairs)?;
    Ok(ranked.result(pairs.len(), ranked.normal_p(), false))
}
