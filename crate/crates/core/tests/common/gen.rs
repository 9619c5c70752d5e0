//! Random instance generators for the property tests.

use fedcompare::data::Label;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    fedcompare::seed::rng(seed, &[0x7e57])
}

/// Scores and labels with both classes present. With `coarse`, scores come
/// from a small grid so ties are frequent.
pub fn scored_labels(rng: &mut ChaCha8Rng, n: usize, coarse: bool) -> (Vec<f64>, Vec<Label>) {
    loop {
        let labels: Vec<Label> = (0..n).map(|_| if rng.random_bool(0.4) { Label::Overlap } else { Label::NoOverlap }).collect();
        let n_pos = labels.iter().filter(|l| l.is_positive()).count();
        if n_pos == 0 || n_pos == n {
            continue;
        }
        let scores = labels
            .iter()
            .map(|l| {
                let shift = if l.is_positive() { 0.15 } else { 0.0 };
                let s: f64 = (rng.random::<f64>() * 0.85 + shift).min(1.0);
                if coarse {
                    (s * 10.0).round() / 10.0
                } else {
                    s
                }
            })
            .collect();
        return (scores, labels);
    }
}
