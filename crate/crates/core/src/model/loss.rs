use crate::{Error, Result};

/// Logistic function, evaluated without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn item_loss(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Mean binary cross-entropy on logits and its gradient with respect to each
/// logit, `(sigmoid(z) - y) / n`.
pub fn bce_with_logits(logits: &[f64], labels: &[f64]) -> Result<(f64, Vec<f64>)> {
    if logits.is_empty() {
        return Err(Error::InvalidInput("empty logit vector".into()));
    }
    if logits.len() != labels.len() {
        return Err(Error::Shape {
            expected: logits.len(),
            actual: labels.len(),
        });
    }
    let n = logits.len() as f64;
    let loss = logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| item_loss(z, y))
        .sum::<f64>()
        / n;
    let grad = logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| (sigmoid(z) - y) / n)
        .collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetry_point() {
        let (loss, grad) = bce_with_logits(&[0.0], &[1.0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad, vec![-0.5]);
    }

    #[test]
    fn saturation() {
        let (loss, grad) = bce_with_logits(&[50.0], &[1.0]).unwrap();
        assert!((0.0..1e-20).contains(&loss));
        assert!(grad[0].abs() < 1e-20);
    }

    #[test]
    fn two_items() {
        let (loss, grad) = bce_with_logits(&[0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad, vec![0.25, -0.25]);
    }

    #[test]
    fn empty_and_mismatch() {
        assert!(matches!(bce_with_logits(&[], &[]), Err(Error::InvalidInput(_))));
        assert!(matches!(bce_with_logits(&[0.0], &[0.0, 1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn sigmoid_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0) < 1e-300);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    proptest! {
        #[test]
        fn loss_is_finite_and_nonnegative(z in -1e4f64..1e4, y in 0u8..=1) {
            let (loss, grad) = bce_with_logits(&[z], &[f64::from(y)]).unwrap();
            prop_assert!(loss.is_finite() && loss >= 0.0);
            prop_assert!(grad[0].is_finite() && grad[0].abs() <= 1.0);
        }
    }
}
