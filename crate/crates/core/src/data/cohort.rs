use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{class_quota, Cohort, Dataset, Example, Label};
use crate::seed::{self, tag};
use crate::{Error, Result};

/// Per-client generation target: size, label prevalence, domain offset and
/// annotation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientSpec {
    pub client_id: u32,
    pub n_total: usize,
    pub overlap_fraction: f64,
    pub feature_shift: Vec<f64>,
    pub label_noise_rate: f64,
}

impl ClientSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let id = self.client_id;
        if self.n_total == 0 {
            return Err(Error::InvalidConfig(format!("client {id}: n_total must be > 0")));
        }
        if !(0.0..=1.0).contains(&self.overlap_fraction) {
            return Err(Error::InvalidConfig(format!(
                "client {id}: overlap_fraction {} outside [0, 1]",
                self.overlap_fraction
            )));
        }
        if !(0.0..0.5).contains(&self.label_noise_rate) {
            return Err(Error::InvalidConfig(format!(
                "client {id}: label_noise_rate {} outside [0, 0.5)",
                self.label_noise_rate
            )));
        }
        if self.feature_shift.len() != dim {
            return Err(Error::InvalidConfig(format!(
                "client {id}: feature_shift has {} entries, expected {dim}",
                self.feature_shift.len()
            )));
        }
        if self.feature_shift.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "client {id}: feature_shift must be finite"
            )));
        }
        Ok(())
    }

    pub fn n_positive(&self) -> usize {
        class_quota(self.overlap_fraction, self.n_total).min(self.n_total)
    }
}

/// Shape of the two base class clusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortGeometry {
    pub dim: usize,
    /// Euclidean distance between the two class means.
    pub margin: f64,
}

/// Generates one dataset per client.
///
/// Both classes are unit-variance Gaussians whose means sit at `±margin/2`
/// along the normalized all-ones direction. Label noise is applied per class:
/// `round(rate * n_class)` examples of each class take their features from the
/// opposite cluster, so the label counts stay exactly at the target.
pub fn generate_cohort(specs: &[ClientSpec], geometry: CohortGeometry, seed: u64) -> Result<Cohort> {
    let dim = geometry.dim;
    if dim < 2 {
        return Err(Error::InvalidConfig(format!("dim must be >= 2, got {dim}")));
    }
    if specs.is_empty() {
        return Err(Error::InvalidConfig("cohort needs at least one client".into()));
    }
    if !geometry.margin.is_finite() || geometry.margin < 0.0 {
        return Err(Error::InvalidConfig("margin must be finite and >= 0".into()));
    }
    let mut seen = BTreeSet::new();
    for spec in specs {
        spec.validate(dim)?;
        if !seen.insert(spec.client_id) {
            return Err(Error::InvalidConfig(format!(
                "duplicate client_id {}",
                spec.client_id
            )));
        }
    }

    let half = geometry.margin / 2.0 / (dim as f64).sqrt();
    let mut cohort = Cohort::new();
    let mut next_id = 0u64;
    for spec in specs {
        let mut rng = seed::rng(seed, &[tag::COHORT, u64::from(spec.client_id)]);
        let n_pos = spec.n_positive();
        let n_neg = spec.n_total - n_pos;

        // (label, cluster the features come from)
        let mut plan: Vec<(Label, Label)> = Vec::with_capacity(spec.n_total);
        for (label, count) in [(Label::Overlap, n_pos), (Label::NoOverlap, n_neg)] {
            let noisy = class_quota(spec.label_noise_rate, count);
            let mut flags: Vec<bool> = (0..count).map(|i| i < noisy).collect();
            flags.shuffle(&mut rng);
            plan.extend(
                flags
                    .into_iter()
                    .map(|f| (label, if f { label.flipped() } else { label })),
            );
        }
        plan.shuffle(&mut rng);

        let examples = plan
            .into_iter()
            .map(|(label, cluster)| {
                let sign = if cluster.is_positive() { 1.0 } else { -1.0 };
                let features = spec
                    .feature_shift
                    .iter()
                    .map(|shift| {
                        let z: f64 = rng.sample(StandardNormal);
                        z + sign * half + shift
                    })
                    .collect();
                let id = next_id;
                next_id += 1;
                Example {
                    id,
                    client_id: spec.client_id,
                    features,
                    label,
                }
            })
            .collect();
        cohort.insert(spec.client_id, Dataset::from_parts_unchecked(dim, examples));
    }
    Ok(cohort)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: u32, n: usize, frac: f64) -> ClientSpec {
        ClientSpec {
            client_id: id,
            n_total: n,
            overlap_fraction: frac,
            feature_shift: vec![0.0; 4],
            label_noise_rate: 0.0,
        }
    }

    fn geometry() -> CohortGeometry {
        CohortGeometry { dim: 4, margin: 2.0 }
    }

    #[test]
    fn table1_client0_counts() {
        let c = generate_cohort(&[spec(0, 650, 0.123)], geometry(), 1).unwrap();
        assert_eq!(c[&0].n_pos(), 80);
        assert_eq!(c[&0].n_neg(), 570);
        assert_eq!(c[&0].len(), 650);
    }

    #[test]
    fn zero_fraction_has_no_positives() {
        let c = generate_cohort(&[spec(3, 100, 0.0)], geometry(), 1).unwrap();
        assert_eq!(c[&3].n_pos(), 0);
        assert_eq!(c[&3].n_neg(), 100);
    }

    #[test]
    fn deterministic_in_seed() {
        let specs = [spec(0, 50, 0.3), spec(1, 40, 0.5)];
        let a = generate_cohort(&specs, geometry(), 9).unwrap();
        let b = generate_cohort(&specs, geometry(), 9).unwrap();
        assert_eq!(a, b);
        let c = generate_cohort(&specs, geometry(), 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ids_are_unique_across_clients() {
        let specs = [spec(0, 50, 0.3), spec(1, 40, 0.5)];
        let c = generate_cohort(&specs, geometry(), 9).unwrap();
        let ids: BTreeSet<u64> = c.values().flat_map(|d| d.ids()).collect();
        assert_eq!(ids.len(), 90);
    }

    #[test]
    fn label_noise_keeps_counts_and_moves_features() {
        let mut s = spec(0, 2000, 0.5);
        s.label_noise_rate = 0.4;
        let mut g = geometry();
        g.margin = 8.0;
        let c = generate_cohort(&[s], g, 5).unwrap();
        let d = &c[&0];
        assert_eq!(d.n_pos(), 1000);
        // Positives whose features sit on the negative side of the boundary.
        let wrong = d
            .iter()
            .filter(|e| e.label.is_positive() && e.features.iter().sum::<f64>() < 0.0)
            .count();
        assert!((350..=450).contains(&wrong), "{wrong}");
    }

    #[test]
    fn feature_shift_is_added() {
        let mut s = spec(0, 4000, 0.5);
        s.feature_shift = vec![10.0, 0.0, 0.0, -5.0];
        let c = generate_cohort(&[s], geometry(), 2).unwrap();
        let n = c[&0].len() as f64;
        let mean0: f64 = c[&0].iter().map(|e| e.features[0]).sum::<f64>() / n;
        let mean3: f64 = c[&0].iter().map(|e| e.features[3]).sum::<f64>() / n;
        assert!((mean0 - 10.0).abs() < 0.1);
        assert!((mean3 + 5.0).abs() < 0.1);
    }

    #[test]
    fn invalid_configurations() {
        assert!(matches!(
            generate_cohort(&[], geometry(), 0),
            Err(Error::InvalidConfig(_))
        ));
        let g = CohortGeometry { dim: 1, margin: 1.0 };
        assert!(matches!(
            generate_cohort(&[spec(0, 10, 0.5)], g, 0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(generate_cohort(&[spec(0, 10, 0.5), spec(0, 10, 0.5)], geometry(), 0).is_err());
        let mut bad = spec(0, 10, 0.5);
        bad.label_noise_rate = 0.5;
        assert!(generate_cohort(&[bad], geometry(), 0).is_err());
    }
}
