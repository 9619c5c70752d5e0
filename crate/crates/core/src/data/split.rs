use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{class_quota, Cohort, Dataset, Label};
use crate::seed::{self, tag};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    /// Fraction of the pooled data held out as the shared test set.
    pub test_fraction: f64,
    /// Total validation data across clients, as a fraction of the original pool.
    pub validation_total_fraction: f64,
    /// Fall back to unstratified sampling when the pool has a single class.
    #[serde(default)]
    pub allow_unstratified: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            test_fraction: 0.10,
            validation_total_fraction: 0.10,
            allow_unstratified: false,
        }
    }
}

impl SplitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test_fraction {} must lie in (0, 1)",
                self.test_fraction
            )));
        }
        let per_client = self.per_client_validation_fraction();
        if !(self.validation_total_fraction > 0.0 && per_client < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "validation_total_fraction {} gives per-client fraction {per_client}",
                self.validation_total_fraction
            )));
        }
        Ok(())
    }

    /// Validation fraction applied to each client's post-test pool.
    pub fn per_client_validation_fraction(&self) -> f64 {
        self.validation_total_fraction / (1.0 - self.test_fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientSplit {
    pub train: Dataset,
    pub validation: Dataset,
}

/// Pooled test set plus per-client train/validation splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitLayout {
    pub test: Dataset,
    pub clients: BTreeMap<u32, ClientSplit>,
}

impl SplitLayout {
    pub fn dim(&self) -> usize {
        self.test.dim()
    }

    pub fn client_ids(&self) -> Vec<u32> {
        self.clients.keys().copied().collect()
    }

    /// Union of every client's training split, in client order.
    pub fn pooled_train(&self) -> Dataset {
        Dataset::concat(self.dim(), self.clients.values().map(|c| &c.train))
            .expect("client splits share the layout dimension")
    }

    /// Union of every client's validation split, in client order.
    pub fn pooled_validation(&self) -> Dataset {
        Dataset::concat(self.dim(), self.clients.values().map(|c| &c.validation))
            .expect("client splits share the layout dimension")
    }

    /// Checks disjointness of all parts and that together they cover `pooled`
    /// exactly. Returns a description of the first violation.
    pub fn check_partition(&self, pooled: &Dataset) -> std::result::Result<(), String> {
        let mut seen = HashSet::new();
        let mut parts: Vec<(&str, &Dataset)> = vec![("test", &self.test)];
        for split in self.clients.values() {
            parts.push(("train", &split.train));
            parts.push(("validation", &split.validation));
        }
        for (name, part) in &parts {
            for ex in part.iter() {
                if !seen.insert(ex.id) {
                    return Err(format!("example {} appears twice (in {name})", ex.id));
                }
            }
        }
        for (client_id, split) in &self.clients {
            for ex in split.train.iter().chain(split.validation.iter()) {
                if ex.client_id != *client_id {
                    return Err(format!(
                        "example {} from client {} stored under client {client_id}",
                        ex.id, ex.client_id
                    ));
                }
            }
        }
        let original: HashSet<u64> = pooled.iter().map(|e| e.id).collect();
        if original != seen {
            return Err(format!(
                "parts cover {} examples, pool has {}",
                seen.len(),
                original.len()
            ));
        }
        Ok(())
    }
}

fn pick_per_class(
    data: &Dataset,
    fraction: f64,
    rng: &mut impl rand::Rng,
) -> HashSet<u64> {
    let mut chosen = HashSet::new();
    for label in [Label::NoOverlap, Label::Overlap] {
        let members: Vec<u64> = data
            .iter()
            .filter(|e| e.label == label)
            .map(|e| e.id)
            .collect();
        let k = class_quota(fraction, members.len());
        for i in index::sample(rng, members.len(), k) {
            chosen.insert(members[i]);
        }
    }
    chosen
}

/// Draws a class-stratified test set: `round(fraction * n_class)` examples
/// per class, uniformly within each class. The remainder keeps the origin
/// client tags.
pub fn stratified_test_split(
    pooled: &Dataset,
    fraction: f64,
    seed: u64,
    allow_unstratified: bool,
) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "test fraction {fraction} must lie in (0, 1)"
        )));
    }
    let mut rng = seed::rng(seed, &[tag::TEST_SPLIT]);
    let chosen = if pooled.has_both_classes() {
        for label in [Label::NoOverlap, Label::Overlap] {
            let n = pooled.count_label(label);
            if fraction * (n as f64) < 1.0 {
                return Err(Error::StratificationInfeasible(format!(
                    "class {} has {n} examples, fewer than one expected test example",
                    label.bit()
                )));
            }
        }
        pick_per_class(pooled, fraction, &mut rng)
    } else if allow_unstratified && !pooled.is_empty() {
        log::warn!("pool has a single class; drawing an unstratified test set");
        let k = class_quota(fraction, pooled.len());
        index::sample(&mut rng, pooled.len(), k)
            .into_iter()
            .map(|i| pooled.examples()[i].id)
            .collect()
    } else {
        return Err(Error::StratificationInfeasible(
            "pool must contain both classes".into(),
        ));
    };
    let test = pooled.filter(|e| chosen.contains(&e.id));
    let remainder = pooled.filter(|e| !chosen.contains(&e.id));
    Ok((test, remainder))
}

/// Sends every remainder example back to the client it came from.
pub fn redistribute(remainder: &Dataset, client_ids: impl IntoIterator<Item = u32>) -> Cohort {
    let mut out: Cohort = client_ids
        .into_iter()
        .map(|id| (id, Dataset::empty(remainder.dim())))
        .collect();
    let mut buckets: BTreeMap<u32, Vec<_>> = BTreeMap::new();
    for ex in remainder.iter() {
        buckets.entry(ex.client_id).or_default().push(ex.clone());
    }
    for (id, examples) in buckets {
        out.insert(id, Dataset::from_parts_unchecked(remainder.dim(), examples));
    }
    out
}

/// Carves a class-preserving validation subset out of each client's
/// post-test pool. The per-client fraction is
/// `target_total_fraction / (1 - test_fraction)` so that summed validation
/// sizes approximate `target_total_fraction` of the original pool.
pub fn per_client_validation_split(
    test: Dataset,
    remainder: &Cohort,
    test_fraction: f64,
    target_total_fraction: f64,
    seed: u64,
) -> Result<SplitLayout> {
    let options = SplitOptions {
        test_fraction,
        validation_total_fraction: target_total_fraction,
        allow_unstratified: false,
    };
    options.validate()?;
    let fraction = options.per_client_validation_fraction();
    let mut clients = BTreeMap::new();
    for (&client_id, data) in remainder {
        for label in [Label::NoOverlap, Label::Overlap] {
            let n = data.count_label(label);
            if n < 2 {
                return Err(Error::ValidationInfeasible {
                    client_id,
                    reason: format!("class {} has {n} examples, need at least 2", label.bit()),
                });
            }
        }
        let mut rng = seed::rng(seed, &[tag::VALIDATION_SPLIT, u64::from(client_id)]);
        let chosen = pick_per_class(data, fraction, &mut rng);
        clients.insert(
            client_id,
            ClientSplit {
                train: data.filter(|e| !chosen.contains(&e.id)),
                validation: data.filter(|e| chosen.contains(&e.id)),
            },
        );
    }
    Ok(SplitLayout { test, clients })
}

/// Full protocol: pool all clients, hold out a stratified test set, return
/// the remainder to its clients and split each into train/validation.
pub fn split_protocol(cohort: &Cohort, options: &SplitOptions, seed: u64) -> Result<SplitLayout> {
    options.validate()?;
    let dim = cohort
        .values()
        .next()
        .map(Dataset::dim)
        .ok_or_else(|| Error::InvalidInput("empty cohort".into()))?;
    let pooled = Dataset::concat(dim, cohort.values())?;
    let (test, remainder) =
        stratified_test_split(&pooled, options.test_fraction, seed, options.allow_unstratified)?;
    let per_client = redistribute(&remainder, cohort.keys().copied());
    per_client_validation_split(
        test,
        &per_client,
        options.test_fraction,
        options.validation_total_fraction,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Example;

    fn dataset(client: u32, first_id: u64, n_neg: usize, n_pos: usize) -> Dataset {
        let mut ex = Vec::new();
        for i in 0..(n_neg + n_pos) {
            ex.push(Example {
                id: first_id + i as u64,
                client_id: client,
                features: vec![i as f64, 0.0],
                label: if i < n_neg { Label::NoOverlap } else { Label::Overlap },
            });
        }
        Dataset::new(2, ex).unwrap()
    }

    #[test]
    fn table1_pooled_counts_split() {
        let pooled = dataset(0, 0, 3561, 1855);
        let (test, rest) = stratified_test_split(&pooled, 0.10, 3, false).unwrap();
        assert_eq!(test.n_neg(), 356);
        assert_eq!(test.n_pos(), 186);
        assert_eq!(test.len() + rest.len(), pooled.len());
    }

    #[test]
    fn exact_halving() {
        let pooled = dataset(0, 0, 10, 10);
        let (test, _) = stratified_test_split(&pooled, 0.5, 3, false).unwrap();
        assert_eq!((test.n_neg(), test.n_pos()), (5, 5));
    }

    #[test]
    fn single_class_requires_override() {
        let pooled = dataset(0, 0, 20, 0);
        assert!(matches!(
            stratified_test_split(&pooled, 0.1, 0, false),
            Err(Error::StratificationInfeasible(_))
        ));
        let (test, rest) = stratified_test_split(&pooled, 0.1, 0, true).unwrap();
        assert_eq!((test.n_neg(), test.n_pos()), (2, 0));
        assert_eq!(rest.len(), 18);
    }

    #[test]
    fn tiny_class_is_infeasible() {
        let pooled = dataset(0, 0, 100, 4);
        assert!(matches!(
            stratified_test_split(&pooled, 0.1, 0, false),
            Err(Error::StratificationInfeasible(_))
        ));
    }

    #[test]
    fn per_client_fraction_is_one_ninth() {
        let opts = SplitOptions::default();
        assert!((opts.per_client_validation_fraction() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn validation_preserves_class_ratio() {
        let mut remainder = Cohort::new();
        remainder.insert(4, dataset(4, 0, 60, 30));
        let layout =
            per_client_validation_split(Dataset::empty(2), &remainder, 0.1, 0.1, 1).unwrap();
        let v = &layout.clients[&4].validation;
        assert_eq!((v.n_neg(), v.n_pos()), (7, 3));
        assert_eq!(v.len(), 10);
        assert_eq!(layout.clients[&4].train.len(), 80);
    }

    #[test]
    fn validation_needs_two_per_class() {
        let mut remainder = Cohort::new();
        remainder.insert(2, dataset(2, 0, 60, 1));
        assert!(matches!(
            per_client_validation_split(Dataset::empty(2), &remainder, 0.1, 0.1, 1),
            Err(Error::ValidationInfeasible { client_id: 2, .. })
        ));
    }

    #[test]
    fn protocol_partitions_the_pool() {
        let mut cohort = Cohort::new();
        cohort.insert(0, dataset(0, 0, 80, 40));
        cohort.insert(1, dataset(1, 1000, 50, 70));
        cohort.insert(2, dataset(2, 2000, 90, 15));
        let layout = split_protocol(&cohort, &SplitOptions::default(), 11).unwrap();
        let pooled = Dataset::concat(2, cohort.values()).unwrap();
        layout.check_partition(&pooled).unwrap();
        assert_eq!(layout.test.n_neg(), class_quota(0.1, 220));
        assert_eq!(layout.test.n_pos(), class_quota(0.1, 125));
    }

    #[test]
    fn split_is_seed_deterministic() {
        let mut cohort = Cohort::new();
        cohort.insert(0, dataset(0, 0, 80, 40));
        cohort.insert(1, dataset(1, 1000, 50, 70));
        let a = split_protocol(&cohort, &SplitOptions::default(), 5).unwrap();
        let b = split_protocol(&cohort, &SplitOptions::default(), 5).unwrap();
        assert_eq!(a, b);
    }
}
