//! One check per acceptance criterion. Each returns a short detail string on
//! success and a description of the first violation on failure.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use fedcompare::data::{
    generate_cohort, rebalance_minority, split_protocol, Cohort, Dataset, Label,
    RebalancePolicy,
};
use fedcompare::eval::{auc, optimize_threshold, ThresholdSource};
use fedcompare::harness::{cmd_bench, listed_files, Experiment, ExperimentConfig, MANIFEST_FILE, PRESETS};
use fedcompare::model::{backward, forward_logits, Batch, ParamVector, PredictorSpec};
use fedcompare::monitor::{flag_outlier_clients, summarize_round, OutlierPolicy};
use fedcompare::paradigms::{run_federated, weighted_average};
use fedcompare::stats::{delong_test, placement_values, weighted_kappa, wilcoxon_signed_rank, Weighting};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use super::gen;
use super::oracles;

pub type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Median test AUC ordering CL >= FL >= mean LL over five seeds on the
/// heterogeneous preset, with a CL margin over LL of at least 0.05.
pub fn bench_ordering(out: &Path) -> Outcome {
    let config = ExperimentConfig::preset("table1").map_err(err)?;
    let started = std::time::Instant::now();
    let report = cmd_bench(&Experiment::new(config, Some(0), Some(out.to_path_buf())), Some(5)).map_err(err)?;
    let detail = format!(
        "median CL {:.4}, FL {:.4}, mean LL {:.4}, CL-LL {:.4}, {:.1}s",
        report.median_cl,
        report.median_fl,
        report.median_mean_ll,
        report.cl_minus_ll(),
        started.elapsed().as_secs_f64()
    );
    ensure(report.pass && report.cl_minus_ll() >= 0.05, || detail.clone())?;
    Ok(detail)
}

/// FedAvg equals the definition to 1e-12 and is exactly order-invariant.
pub fn fedavg_algebra(instances: usize) -> Outcome {
    let mut rng = gen::rng(2);
    let mut worst: f64 = 0.0;
    for case in 0..instances {
        let k = rng.random_range(1..=16);
        let dim = rng.random_range(1..=512);
        let layout = ParamVector::layout_for(&PredictorSpec::logistic(dim - 1));
        let raw: Vec<(usize, Vec<f64>)> = (0..k)
            .map(|_| {
                let scale = 10f64.powi(rng.random_range(-3..=2));
                let w = (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
                (rng.random_range(1..=5000), w)
            })
            .collect();
        let params: Vec<ParamVector> = raw
            .iter()
            .map(|(_, w)| ParamVector::from_values(layout.clone(), w.clone()).unwrap())
            .collect();
        let mut entries: Vec<(u32, usize, &ParamVector)> =
            raw.iter().zip(&params).enumerate().map(|(i, ((n, _), p))| (i as u32, *n, p)).collect();
        let got = weighted_average(&entries).map_err(err)?;
        let want = oracles::weighted_mean(&raw);
        for (g, w) in got.values().iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
        ensure(worst <= 1e-12, || format!("case {case}: deviation {worst:e}"))?;
        entries.shuffle(&mut rng);
        let shuffled = weighted_average(&entries).map_err(err)?;
        ensure(
            got.values().iter().zip(shuffled.values()).all(|(a, b)| a.to_bits() == b.to_bits()),
            || format!("case {case}: result changed under permutation"),
        )?;
    }
    Ok(format!("{instances} sets, max deviation {worst:.1e}, permutation-exact"))
}

fn random_spec(rng: &mut impl Rng) -> PredictorSpec {
    let input = rng.random_range(1..=6);
    let depth = rng.random_range(0..=2);
    if depth == 0 {
        PredictorSpec::logistic(input)
    } else {
        PredictorSpec::mlp(input, (0..depth).map(|_| rng.random_range(1..=8)).collect())
    }
}

/// Analytic gradients agree with central finite differences of an
/// independently computed loss.
pub fn gradient_check(cases: usize) -> Outcome {
    let mut rng = gen::rng(3);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let spec = random_spec(&mut rng);
        // random biases too: zero biases put dead-layer rows exactly on a ReLU kink
        let values: Vec<f64> = (0..spec.n_params()).map(|_| rng.sample(StandardNormal)).collect();
        let params = ParamVector::from_values(ParamVector::layout_for(&spec), values).map_err(err)?;
        let n = rng.random_range(1..=8);
        let features: Vec<f64> = (0..n * spec.input_dim).map(|_| rng.sample(StandardNormal)).collect();
        let labels: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.5) as u8)).collect();
        let batch = Batch::new(spec.input_dim, features, labels.clone()).map_err(err)?;
        let (loss, grad) = backward(&params, &spec, &batch).map_err(err)?;
        let loss_at = |values: Vec<f64>| -> Result<f64, String> {
            let p = params.with_values(values).map_err(err)?;
            Ok(oracles::bce(&forward_logits(&p, &spec, &batch).map_err(err)?, &labels))
        };
        let reference = loss_at(params.values().to_vec())?;
        ensure((loss - reference).abs() <= 1e-12, || format!("case {case}: loss {loss} vs {reference}"))?;
        let mut fd = Vec::with_capacity(grad.len());
        for i in 0..grad.len() {
            let mut plus = params.values().to_vec();
            let mut minus = plus.clone();
            plus[i] += h;
            minus[i] -= h;
            fd.push((loss_at(plus)? - loss_at(minus)?) / (2.0 * h));
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&grad).max(norm(&fd)).max(1e-12);
        worst = worst.max(rel);
        ensure(rel < 1e-5, || format!("case {case} ({} params): relative error {rel:e}", grad.len()))?;
    }
    Ok(format!("{cases} cases, max relative error {worst:.1e}"))
}

/// Trapezoidal AUC equals pairwise Mann-Whitney counting exactly.
pub fn auc_oracle(instances: usize) -> Outcome {
    let mut rng = gen::rng(4);
    for case in 0..instances {
        let n = rng.random_range(2..=200);
        let (scores, labels) = gen::scored_labels(&mut rng, n, case % 2 == 0);
        let got = auc(&scores, &labels).map_err(err)?;
        let want = oracles::mann_whitney_auc(&scores, &labels);
        ensure(got == want, || format!("case {case}: {got} vs {want}"))?;
    }
    Ok(format!("{instances} instances exact"))
}

/// The optimizer's J equals the best J of an exhaustive scan.
pub fn threshold_oracle(instances: usize) -> Outcome {
    let mut rng = gen::rng(5);
    for case in 0..instances {
        let n = rng.random_range(2..=200);
        let (scores, labels) = gen::scored_labels(&mut rng, n, case % 2 == 0);
        let choice = optimize_threshold(&scores, &labels, ThresholdSource::External).map_err(err)?;
        let want = oracles::exhaustive_best_j(&scores, &labels);
        ensure(choice.achieved_j == want, || {
            format!("case {case}: J {} vs exhaustive {want}", choice.achieved_j)
        })?;
        let at = oracles::youden_at(&scores, &labels, choice.threshold);
        ensure(at == want, || format!("case {case}: J at chosen threshold is {at}"))?;
    }
    Ok(format!("{instances} instances exact"))
}

/// Exact Wilcoxon p equals full sign enumeration bit-for-bit.
pub fn wilcoxon_exact(per_k: usize) -> Outcome {
    let mut rng = gen::rng(6);
    let mut checked = 0;
    for k in 2..=12 {
        for case in 0..per_k {
            // small integer grid: frequent ties in magnitude
            let diffs: Vec<f64> = loop {
                let d: Vec<f64> = (0..k).map(|_| f64::from(rng.random_range(-6i32..=6)) / 2.0).collect();
                if d.iter().filter(|x| **x != 0.0).count() >= 2 {
                    break d;
                }
            };
            let pairs: Vec<(f64, f64)> = diffs.iter().map(|&d| (d, 0.0)).collect();
            let got = wilcoxon_signed_rank(&pairs).map_err(err)?;
            let want = oracles::wilcoxon_enumeration_p(&diffs);
            ensure(got.exact && got.p_value.to_bits() == want.to_bits(), || {
                format!("K={k} case {case} {diffs:?}: {} vs {want}", got.p_value)
            })?;
            checked += 1;
        }
    }
    let all_positive: Vec<(f64, f64)> = (1..=8).map(|i| (f64::from(i), 0.0)).collect();
    let p8 = wilcoxon_signed_rank(&all_positive).map_err(err)?.p_value;
    ensure(p8 == 0.0078125, || format!("all-positive K=8 gives {p8}"))?;
    Ok(format!("{checked} vectors bit-exact, K=8 all-positive p={p8}"))
}

/// Placement AUC matches the ROC AUC, swapping models negates z exactly and
/// z matches an O(mn) reference.
pub fn delong_consistency(instances: usize) -> Outcome {
    let mut rng = gen::rng(7);
    let mut worst: f64 = 0.0;
    for case in 0..instances {
        let n = rng.random_range(4..=300);
        let (a, labels) = gen::scored_labels(&mut rng, n, case % 3 == 0);
        if labels.iter().filter(|l| l.is_positive()).count() < 2
            || labels.iter().filter(|l| !l.is_positive()).count() < 2
        {
            continue;
        }
        let b: Vec<f64> = a.iter().map(|s| s + 0.3 * rng.random::<f64>()).collect();
        for s in [&a, &b] {
            let pv = placement_values(s, &labels).auc();
            let roc = auc(s, &labels).map_err(err)?;
            ensure((pv - roc).abs() <= 1e-12, || format!("case {case}: placement AUC {pv} vs {roc}"))?;
        }
        let ab = delong_test(&a, &b, &labels).map_err(err)?;
        let ba = delong_test(&b, &a, &labels).map_err(err)?;
        ensure(ab.z == -ba.z && ab.p_value == ba.p_value, || {
            format!("case {case}: z {} vs swapped {}", ab.z, ba.z)
        })?;
        let (z, _, _) = oracles::delong_z(&a, &b, &labels);
        worst = worst.max((ab.z - z).abs());
        ensure((ab.z - z).abs() <= 1e-10, || format!("case {case}: z {} vs reference {z}", ab.z))?;
    }
    Ok(format!("{instances} instances, max z deviation {worst:.1e}"))
}

/// Perfect agreement, the two-category identity and independent raters.
pub fn kappa_checks() -> Outcome {
    let mut rng = gen::rng(8);
    for c in 2..=5 {
        let a: Vec<usize> = (0..50).map(|_| rng.random_range(0..c)).collect();
        for w in [Weighting::Unweighted, Weighting::Linear, Weighting::Quadratic] {
            let k = weighted_kappa(&a, &a, c, w).map_err(err)?.kappa;
            ensure(k == 1.0, || format!("perfect agreement, C={c}, {w:?}: {k}"))?;
        }
    }
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = rng.random_range(5..=300);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let b: Vec<usize> = a.iter().map(|&x| if rng.random_bool(0.3) { 1 - x } else { x }).collect();
        let q = weighted_kappa(&a, &b, 2, Weighting::Quadratic).map_err(err)?;
        if q.degenerate {
            continue;
        }
        let u = oracles::unweighted_kappa(&a, &b, 2);
        worst = worst.max((q.kappa - u).abs());
        ensure((q.kappa - u).abs() <= 1e-12, || format!("case {case}: quadratic {} vs unweighted {u}", q.kappa))?;
        let r = oracles::kappa(&a, &b, 2, |i, j| (i as f64 - j as f64).powi(2));
        ensure((q.kappa - r).abs() <= 1e-12, || format!("case {case}: {} vs proportions {r}", q.kappa))?;
    }
    let a: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..4)).collect();
    let b: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..4)).collect();
    let indep = weighted_kappa(&a, &b, 4, Weighting::Quadratic).map_err(err)?.kappa;
    ensure(indep.abs() < 0.05, || format!("independent raters: kappa {indep}"))?;
    Ok(format!("perfect = 1, C=2 identity max deviation {worst:.1e}, independent {indep:.4}"))
}

fn preset_cohort(name: &str, seed: u64) -> Result<(ExperimentConfig, Cohort), String> {
    let config = ExperimentConfig::preset(name).map_err(err)?;
    let cohort = generate_cohort(&config.client_specs(seed), config.geometry(), seed).map_err(err)?;
    Ok((config, cohort))
}

/// Stratified test counts, validation fraction and partition invariants.
pub fn split_checks(seeds: u64) -> Outcome {
    let mut layouts = 0;
    for (name, _) in PRESETS {
        for seed in 0..seeds {
            let (config, cohort) = preset_cohort(name, seed)?;
            let pooled = Dataset::concat(config.cohort.dim, cohort.values()).map_err(err)?;
            let layout = split_protocol(&cohort, &config.splits, seed).map_err(err)?;
            let ctx = format!("{name} seed {seed}");
            for label in [Label::NoOverlap, Label::Overlap] {
                let want = (config.splits.test_fraction * pooled.count_label(label) as f64).round() as usize;
                let got = layout.test.count_label(label);
                ensure(got == want, || format!("{ctx}: class {} test count {got}, expected {want}", label.bit()))?;
            }
            let fraction = config.splits.per_client_validation_fraction();
            ensure((fraction - 1.0 / 9.0).abs() < 1e-15, || format!("{ctx}: fraction {fraction}"))?;
            for (id, split) in &layout.clients {
                for label in [Label::NoOverlap, Label::Overlap] {
                    let pool = split.train.count_label(label) + split.validation.count_label(label);
                    let got = split.validation.count_label(label) as f64;
                    let ideal = pool as f64 / 9.0;
                    ensure((got - ideal).abs() <= 1.0, || {
                        format!("{ctx}: client {id} class {} has {got} of {pool}", label.bit())
                    })?;
                }
            }
            layout.check_partition(&pooled).map_err(|e| format!("{ctx}: {e}"))?;
            let sizes: usize = layout.test.len()
                + layout.clients.values().map(|c| c.train.len() + c.validation.len()).sum::<usize>();
            ensure(sizes == pooled.len(), || format!("{ctx}: {sizes} vs {}", pooled.len()))?;
            layouts += 1;
        }
    }
    Ok(format!("{layouts} layouts across {} presets", PRESETS.len()))
}

fn dataset_hash(d: &Dataset) -> String {
    let mut h = Sha256::new();
    for e in d.iter() {
        h.update(e.id.to_le_bytes());
        h.update([e.label.bit()]);
        for v in &e.features {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    format!("{:x}", h.finalize())
}

/// Equal class counts after upsampling, stable sets within a regeneration
/// window and fresh sets across windows.
pub fn rebalance_checks() -> Outcome {
    let (config, cohort) = preset_cohort("table1", 0)?;
    let layout = split_protocol(&cohort, &config.splits, 0).map_err(err)?;
    let policy = RebalancePolicy { enabled: true, regenerate_every: 2, jitter_scale: 0.1 };
    let mut checked = 0;
    for (id, split) in &layout.clients {
        let train = &split.train;
        let hashes: Vec<String> = (0..6)
            .map(|epoch| {
                let out = rebalance_minority(train, &policy, epoch, 11).map_err(err)?;
                ensure(out.n_pos() == out.n_neg(), || {
                    format!("client {id} epoch {epoch}: {} vs {}", out.n_pos(), out.n_neg())
                })?;
                ensure(out.n_pos() == train.n_pos().max(train.n_neg()), || format!("client {id}: majority changed"))?;
                Ok(dataset_hash(&out))
            })
            .collect::<Result<_, String>>()?;
        for w in 0..3 {
            ensure(hashes[2 * w] == hashes[2 * w + 1], || format!("client {id}: window {w} not stable"))?;
        }
        let distinct: HashSet<&String> = [&hashes[0], &hashes[2], &hashes[4]].into_iter().collect();
        let balanced = train.n_pos() == train.n_neg();
        ensure(balanced || distinct.len() == 3, || format!("client {id}: windows repeat"))?;
        checked += 1;
    }
    Ok(format!("{checked} clients, 3 windows each"))
}

/// Per-seed outcome of the label-flip monitoring run.
pub struct FlipRun {
    pub seed: u64,
    pub lowest_cosine: u32,
    pub flagged: BTreeMap<u32, usize>,
}

pub fn label_flip_run(config: &ExperimentConfig, seed: u64) -> Result<FlipRun, String> {
    let cohort = generate_cohort(&config.client_specs(seed), config.geometry(), seed).map_err(err)?;
    let layout = split_protocol(&cohort, &config.splits, seed).map_err(err)?;
    let run = run_federated(&layout, &config.model, &config.train, &config.rounds, seed).map_err(err)?;
    let summaries = run
        .rounds
        .iter()
        .map(|r| summarize_round(r.round, &r.global_before, &r.updates))
        .collect::<fedcompare::Result<Vec<_>>>()
        .map_err(err)?;
    let ids = summaries[0].similarity.client_ids.clone();
    let mean_cos: Vec<f64> = (0..ids.len())
        .map(|i| summaries.iter().map(|s| s.similarity.mean_off_diagonal(i)).sum::<f64>() / summaries.len() as f64)
        .collect();
    let lowest = (0..ids.len()).min_by(|&a, &b| mean_cos[a].total_cmp(&mean_cos[b])).expect("clients");
    let policy = OutlierPolicy { z_threshold: config.monitor.z_threshold, min_deviation: config.monitor.min_deviation };
    let mut flagged = BTreeMap::new();
    for f in flag_outlier_clients(&summaries, &policy).map_err(err)? {
        *flagged.entry(f.client_id).or_insert(0) += 1;
    }
    Ok(FlipRun { seed, lowest_cosine: ids[lowest], flagged })
}

/// The corrupted client has the lowest mean cosine similarity in at least
/// 80% of seeds and is flagged in at least 50%.
pub fn label_flip_detection(seeds: u64) -> Outcome {
    let config = ExperimentConfig::preset("label_flip").map_err(err)?;
    let corrupted = config
        .cohort
        .clients
        .iter()
        .max_by(|a, b| a.label_noise_rate.total_cmp(&b.label_noise_rate))
        .map(|c| c.client_id)
        .expect("clients");
    ensure(config.monitor.z_threshold == 3.0, || "preset z threshold is not 3".into())?;
    let (mut lowest, mut flagged) = (0, 0);
    for seed in 0..seeds {
        let r = label_flip_run(&config, seed)?;
        lowest += usize::from(r.lowest_cosine == corrupted);
        flagged += usize::from(r.flagged.contains_key(&corrupted));
    }
    let detail = format!("lowest cosine {lowest}/{seeds}, flagged {flagged}/{seeds}");
    ensure(lowest * 10 >= seeds as usize * 8 && flagged * 2 >= seeds as usize, || detail.clone())?;
    Ok(detail)
}

/// Two bench runs with the same seed leave byte-identical artifacts; only
/// the manifest (timings, timestamps) may differ.
pub fn bench_determinism(a: &Path, b: &Path, seeds: usize) -> Outcome {
    for dir in [a, b] {
        let config = ExperimentConfig::preset("table1").map_err(err)?;
        cmd_bench(&Experiment::new(config, Some(7), Some(dir.to_path_buf())), Some(seeds)).map_err(err)?;
    }
    let files_a = listed_files(a).map_err(err)?;
    let files_b = listed_files(b).map_err(err)?;
    ensure(files_a == files_b, || "runs list different files".into())?;
    let mut compared = 0;
    for rel in &files_a {
        if rel.file_name().is_some_and(|n| n == MANIFEST_FILE) {
            continue;
        }
        let x = fs::read(a.join(rel)).map_err(|e| format!("{}: {e}", rel.display()))?;
        let y = fs::read(b.join(rel)).map_err(|e| format!("{}: {e}", rel.display()))?;
        ensure(x == y, || format!("{} differs", rel.display()))?;
        compared += 1;
    }
    ensure(files_a.iter().any(|p| p.starts_with("seed_7/checkpoints")), || "no checkpoints listed".into())?;
    ensure(files_a.iter().any(|p| p.starts_with("seed_7/tables")), || "no tables listed".into())?;
    Ok(format!("{compared} files byte-identical"))
}

