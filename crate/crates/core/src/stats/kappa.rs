use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Unweighted,
    Linear,
    Quadratic,
}

impl Weighting {
    /// Disagreement weight for categories `i`, `j` out of `c`.
    fn weight(self, i: usize, j: usize, c: usize) -> f64 {
        let d = i.abs_diff(j) as f64;
        let span = (c - 1) as f64;
        match self {
            Weighting::Unweighted => f64::from(u8::from(i != j)),
            Weighting::Linear => d / span,
            Weighting::Quadratic => (d * d) / (span * span),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    pub n: usize,
    pub categories: usize,
    /// No expected disagreement (both raters constant and equal); kappa is 1 by convention.
    pub degenerate: bool,
}

/// Weighted Cohen's kappa between two raters over `categories` ordinal classes.
pub fn weighted_kappa(
    rater_a: &[usize],
    rater_b: &[usize],
    categories: usize,
    weighting: Weighting,
) -> Result<KappaResult> {
    if categories < 2 {
        return Err(Error::InvalidInput("kappa needs at least two categories".into()));
    }
    if rater_a.len() != rater_b.len() {
        return Err(Error::InvalidInput(format!(
            "rater vectors differ in length: {} vs {}",
            rater_a.len(),
            rater_b.len()
        )));
    }
    if rater_a.is_empty() {
        return Err(Error::InvalidInput("no rated cases".into()));
    }
    if let Some(&bad) = rater_a.iter().chain(rater_b).find(|&&x| x >= categories) {
        return Err(Error::InvalidInput(format!(
            "category {bad} outside 0..{categories}"
        )));
    }
    let c = categories;
    let mut observed = vec![0u64; c * c];
    let mut rows = vec![0u64; c];
    let mut cols = vec![0u64; c];
    for (&a, &b) in rater_a.iter().zip(rater_b) {
        observed[a * c + b] += 1;
        rows[a] += 1;
        cols[b] += 1;
    }
    let n = rater_a.len() as f64;
    let mut disagree_obs = 0.0;
    let mut disagree_exp = 0.0;
    for i in 0..c {
        for j in 0..c {
            let w = weighting.weight(i, j, c);
            disagree_obs += w * observed[i * c + j] as f64;
            disagree_exp += w * (rows[i] * cols[j]) as f64;
        }
    }
    if disagree_exp == 0.0 {
        return Ok(KappaResult {
            kappa: 1.0,
            n: rater_a.len(),
            categories,
            degenerate: true,
        });
    }
    Ok(KappaResult {
        kappa: 1.0 - n * disagree_obs / disagree_exp,
        n: rater_a.len(),
        categories,
        degenerate: false,
    })
}
