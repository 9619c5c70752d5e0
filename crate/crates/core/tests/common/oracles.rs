//! Reference implementations. Each is computed directly from its
//! definition, deliberately without sharing code with the crate.

use fedcompare::data::Label;

/// Mann-Whitney AUC by counting all positive/negative pairs; ties count 1/2.
pub fn mann_whitney_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, l)| l.is_positive()).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, l)| !l.is_positive()).map(|(s, _)| *s).collect();
    let mut twice_wins: u64 = 0;
    for p in &pos {
        for n in &neg {
            twice_wins += if p > n { 2 } else if p == n { 1 } else { 0 };
        }
    }
    twice_wins as f64 / (2 * pos.len() * neg.len()) as f64
}

/// Youden's J at `score >= t`, as `sensitivity - (1 - specificity)`.
pub fn youden_at(scores: &[f64], labels: &[Label], t: f64) -> f64 {
    let (mut tp, mut fn_, mut tn, mut fp) = (0usize, 0usize, 0usize, 0usize);
    for (s, l) in scores.iter().zip(labels) {
        match (*s >= t, l.is_positive()) {
            (true, true) => tp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
        }
    }
    let sens = tp as f64 / (tp + fn_) as f64;
    let spec = tn as f64 / (tn + fp) as f64;
    sens - (1.0 - spec)
}

/// Best J over every distinct decision rule: a threshold at each observed
/// score plus one above all scores.
pub fn exhaustive_best_j(scores: &[f64], labels: &[Label]) -> f64 {
    scores
        .iter()
        .copied()
        .chain([f64::INFINITY])
        .map(|t| youden_at(scores, labels, t))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Two-sided exact Wilcoxon p by listing every sign assignment:
/// `P(min(W+, W-) <= observed)` under the null. Zero differences dropped,
/// tied magnitudes get average ranks.
pub fn wilcoxon_enumeration_p(diffs: &[f64]) -> f64 {
    let d: Vec<f64> = diffs.iter().copied().filter(|x| *x != 0.0).collect();
    let k = d.len();
    // doubled average rank: 2 * (#smaller) + (#equal) + 1
    let twice_rank: Vec<u64> = d
        .iter()
        .map(|x| {
            let smaller = d.iter().filter(|y| y.abs() < x.abs()).count() as u64;
            let equal = d.iter().filter(|y| y.abs() == x.abs()).count() as u64;
            2 * smaller + equal + 1
        })
        .collect();
    let total: u64 = twice_rank.iter().sum();
    let observed_plus: u64 = d.iter().zip(&twice_rank).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let observed = observed_plus.min(total - observed_plus);
    let mut count: u64 = 0;
    for mask in 0u64..(1 << k) {
        let plus: u64 = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| twice_rank[i]).sum();
        if plus.min(total - plus) <= observed {
            count += 1;
        }
    }
    count as f64 / (1u64 << k) as f64
}

fn psi(x: f64, y: f64) -> f64 {
    if x > y {
        1.0
    } else if x == y {
        0.5
    } else {
        0.0
    }
}

fn sample_cov(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
}

/// DeLong's z from O(mn) structural components.
pub fn delong_z(a: &[f64], b: &[f64], labels: &[Label]) -> (f64, f64, f64) {
    let idx_pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_positive()).collect();
    let idx_neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i].is_positive()).collect();
    let (m, n) = (idx_pos.len() as f64, idx_neg.len() as f64);
    let comps = |s: &[f64]| {
        let v10: Vec<f64> = idx_pos.iter().map(|&i| idx_neg.iter().map(|&j| psi(s[i], s[j])).sum::<f64>() / n).collect();
        let v01: Vec<f64> = idx_neg.iter().map(|&j| idx_pos.iter().map(|&i| psi(s[i], s[j])).sum::<f64>() / m).collect();
        (v10, v01)
    };
    let (a10, a01) = comps(a);
    let (b10, b01) = comps(b);
    let auc_a = a10.iter().sum::<f64>() / m;
    let auc_b = b10.iter().sum::<f64>() / m;
    let var_a = sample_cov(&a10, &a10) / m + sample_cov(&a01, &a01) / n;
    let var_b = sample_cov(&b10, &b10) / m + sample_cov(&b01, &b01) / n;
    let cov = sample_cov(&a10, &b10) / m + sample_cov(&a01, &b01) / n;
    ((auc_a - auc_b) / (var_a + var_b - 2.0 * cov).sqrt(), auc_a, auc_b)
}

/// Cohen's kappa from the proportion tables; `weight(i, j)` is the
/// disagreement weight.
pub fn kappa(a: &[usize], b: &[usize], c: usize, weight: impl Fn(usize, usize) -> f64) -> f64 {
    let n = a.len() as f64;
    let mut obs = vec![vec![0.0; c]; c];
    for (&i, &j) in a.iter().zip(b) {
        obs[i][j] += 1.0 / n;
    }
    let row: Vec<f64> = (0..c).map(|i| obs[i].iter().sum()).collect();
    let col: Vec<f64> = (0..c).map(|j| (0..c).map(|i| obs[i][j]).sum()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..c {
        for j in 0..c {
            num += weight(i, j) * obs[i][j];
            den += weight(i, j) * row[i] * col[j];
        }
    }
    1.0 - num / den
}

/// Classical unweighted kappa `(p_o - p_e) / (1 - p_e)`.
pub fn unweighted_kappa(a: &[usize], b: &[usize], c: usize) -> f64 {
    let n = a.len() as f64;
    let po = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let pe: f64 = (0..c)
        .map(|k| {
            let ra = a.iter().filter(|&&x| x == k).count() as f64 / n;
            let rb = b.iter().filter(|&&x| x == k).count() as f64 / n;
            ra * rb
        })
        .sum();
    (po - pe) / (1.0 - pe)
}

/// FedAvg from its definition: `sum_k n_k w_k / sum_k n_k`.
pub fn weighted_mean(entries: &[(usize, Vec<f64>)]) -> Vec<f64> {
    let dim = entries[0].1.len();
    let total: f64 = entries.iter().map(|(n, _)| *n as f64).sum();
    (0..dim)
        .map(|i| entries.iter().map(|(n, w)| *n as f64 * w[i]).sum::<f64>() / total)
        .collect()
}

/// Mean binary cross-entropy from logits, `mean(log(1 + e^z) - y z)`.
pub fn bce(logits: &[f64], labels: &[f64]) -> f64 {
    logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| z.max(0.0) - y * z + (-z.abs()).exp().ln_1p())
        .sum::<f64>()
        / logits.len() as f64
}
