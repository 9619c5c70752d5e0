mod common;

use common::criteria;
use fedcompare::data::{
    generate_cohort, split_protocol, stratified_test_split, Dataset, Example, Label, SplitOptions,
};
use fedcompare::harness::ExperimentConfig;
use fedcompare::Error;

#[test]
fn split_invariants_hold_on_every_preset() {
    criteria::split_checks(2).unwrap();
}

#[test]
fn rebalance_windows_and_counts() {
    criteria::rebalance_checks().unwrap();
}

#[test]
fn table1_cohort_matches_client_targets() {
    let config = ExperimentConfig::preset("table1").unwrap();
    let specs = config.client_specs(0);
    let cohort = generate_cohort(&specs, config.geometry(), 0).unwrap();
    for spec in &specs {
        let data = &cohort[&spec.client_id];
        assert_eq!(data.len(), spec.n_total);
        assert_eq!(data.n_pos(), spec.n_positive());
    }
    let positives: Vec<usize> = specs.iter().map(|s| s.n_positive()).collect();
    assert_eq!(positives, [80, 264, 222, 263, 309, 212, 260, 245]);
}

#[test]
fn cohort_and_split_are_seed_deterministic() {
    let config = ExperimentConfig::preset("table1").unwrap();
    let build = |seed| {
        let cohort = generate_cohort(&config.client_specs(seed), config.geometry(), seed).unwrap();
        split_protocol(&cohort, &config.splits, seed).unwrap()
    };
    assert_eq!(build(3), build(3));
    assert_ne!(build(3).test.ids(), build(4).test.ids());
}

fn single_class(n: usize) -> Dataset {
    let ex = (0..n)
        .map(|i| Example { id: i as u64, client_id: 1, features: vec![i as f64, 0.0], label: Label::Overlap })
        .collect();
    Dataset::new(2, ex).unwrap()
}

#[test]
fn single_class_pool_needs_explicit_opt_in() {
    let pool = single_class(50);
    assert!(matches!(
        stratified_test_split(&pool, 0.1, 0, false),
        Err(Error::StratificationInfeasible(_))
    ));
    let (test, rest) = stratified_test_split(&pool, 0.1, 0, true).unwrap();
    assert_eq!((test.len(), rest.len()), (5, 45));
}

#[test]
fn bad_fractions_are_rejected() {
    let opts = SplitOptions { test_fraction: 1.0, ..SplitOptions::default() };
    assert!(opts.validate().is_err());
    let opts = SplitOptions { validation_total_fraction: 0.95, ..SplitOptions::default() };
    assert!(opts.validate().is_err());
}
