use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::{read_json, read_text, sha256_hex, ArtifactWriter, RunManifest};
use super::tables::{curve_csv, metrics_csv, roc_csv};
use super::ExperimentConfig;
use crate::data::{
    generate_cohort, parse_dataset_csv, split_protocol, write_dataset_csv, write_predictions, Cohort, Predictions,
    ScoreKind, SplitLayout,
};
use crate::eval::{two_level_evaluate, Evaluation, ModelSet};
use crate::model::{Checkpoint, ParamVector};
use crate::monitor::{
    aggregate_thresholds, compute_j_curve, flag_outlier_clients, summarize_round, AggregatedThreshold, JCurve,
    OutlierFlag, OutlierPolicy, RoundSummary, ThresholdGrid,
};
use crate::paradigms::{run_federated, train_centralized, train_local, ClientUpdate, Paradigm, TrainingRunRecord};
use crate::stats::{build_significance_table, standard_plan, AucEvidence, SignificanceRow};
use crate::{Error, Result};

pub const EVALUATION_FILE: &str = "evaluation.json";
pub const ROUND_LOG: &str = "logs/fl_rounds.jsonl";

/// A config bound to a master seed and an output directory.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Experiment {
    /// `seed` and `out` override the config's `master_seed` and `output_dir`.
    pub fn new(config: ExperimentConfig, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        let seed = seed.unwrap_or(config.master_seed);
        let out = out.unwrap_or_else(|| config.output_dir.clone());
        Self { config, seed, out }
    }

    fn child(&self, seed: u64, out: PathBuf) -> Self {
        Self { config: self.config.clone(), seed, out }
    }

    pub fn config_hash(&self) -> String {
        sha256_hex(self.config.to_toml().as_bytes())
    }

    fn finish(&self, writer: ArtifactWriter, command: &str, started: Instant) -> Result<RunManifest> {
        writer.finish(command, &self.config_hash(), self.seed, started.elapsed())
    }

    fn client_file(client_id: u32) -> String {
        format!("cohort/client_{client_id}.csv")
    }

    pub fn load_cohort(&self) -> Result<Cohort> {
        let mut cohort = Cohort::new();
        for c in &self.config.cohort.clients {
            let path = self.out.join(Self::client_file(c.client_id));
            let data = parse_dataset_csv(&read_text(&path)?)?;
            if data.dim() != self.config.cohort.dim {
                return Err(Error::InvalidInput(format!(
                    "{}: dimension {} differs from config {}",
                    path.display(),
                    data.dim(),
                    self.config.cohort.dim
                )));
            }
            cohort.insert(c.client_id, data);
        }
        Ok(cohort)
    }

    /// The split is a deterministic function of cohort and seed, so it is
    /// recomputed rather than read back.
    pub fn layout(&self) -> Result<SplitLayout> {
        split_protocol(&self.load_cohort()?, &self.config.splits, self.seed)
    }

    fn checkpoint_path(&self, name: &str) -> PathBuf {
        self.out.join(checkpoint_file(name))
    }
}

fn checkpoint_file(name: &str) -> String {
    format!("checkpoints/{}.json", name.to_lowercase())
}

/// `None` selects every paradigm.
pub fn selected(paradigm: Option<Paradigm>) -> Vec<Paradigm> {
    paradigm.map_or_else(|| Paradigm::ALL.to_vec(), |p| vec![p])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub client_id: u32,
    pub n_total: usize,
    pub n_overlap: usize,
    pub n_no_overlap: usize,
    pub overlap_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub rows: Vec<CohortRow>,
    pub n_test: usize,
    pub n_test_overlap: usize,
}

impl fmt::Display for SynthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6} {:>6} {:>8} {:>11} {:>9}", "client", "n", "overlap", "no overlap", "overlap %")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>6} {:>6} {:>8} {:>11} {:>9.1}",
                r.client_id, r.n_total, r.n_overlap, r.n_no_overlap, r.overlap_pct
            )?;
        }
        write!(
            f,
            "test set: {} examples ({} overlap / {} no overlap)",
            self.n_test,
            self.n_test_overlap,
            self.n_test - self.n_test_overlap
        )
    }
}

#[derive(Serialize)]
struct SplitIds {
    test: Vec<u64>,
    clients: BTreeMap<u32, ClientIds>,
}

#[derive(Serialize)]
struct ClientIds {
    train: Vec<u64>,
    validation: Vec<u64>,
}

/// Generates the cohort, writes one CSV per client plus the split ids.
pub fn cmd_synth(exp: &Experiment) -> Result<SynthReport> {
    let started = Instant::now();
    let config = &exp.config;
    config.validate()?;
    let cohort = generate_cohort(&config.client_specs(exp.seed), config.geometry(), exp.seed)?;
    let layout = split_protocol(&cohort, &config.splits, exp.seed)?;

    let mut w = ArtifactWriter::new(&exp.out)?;
    w.write("config.toml", config.to_toml())?;
    let mut rows = Vec::new();
    let mut summary = String::from("client_id,n_total,n_overlap,n_no_overlap,overlap_pct\n");
    for (&k, data) in &cohort {
        w.write(&Experiment::client_file(k), write_dataset_csv(data))?;
        let row = CohortRow {
            client_id: k,
            n_total: data.len(),
            n_overlap: data.n_pos(),
            n_no_overlap: data.n_neg(),
            overlap_pct: 100.0 * data.n_pos() as f64 / data.len() as f64,
        };
        summary.push_str(&format!(
            "{},{},{},{},{:.1}\n",
            row.client_id, row.n_total, row.n_overlap, row.n_no_overlap, row.overlap_pct
        ));
        rows.push(row);
    }
    w.write("cohort/summary.csv", summary)?;
    let ids = SplitIds {
        test: layout.test.ids(),
        clients: layout
            .clients
            .iter()
            .map(|(&k, s)| (k, ClientIds { train: s.train.ids(), validation: s.validation.ids() }))
            .collect(),
    };
    w.write_json("split.json", &ids)?;
    exp.finish(w, "synth", started)?;
    Ok(SynthReport { rows, n_test: layout.test.len(), n_test_overlap: layout.test.n_pos() })
}

/// One line of the federated round log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLogRecord {
    pub round: usize,
    pub client_id: u32,
    pub n_samples: usize,
    pub train_loss_end: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    /// Global weights the round started from.
    pub global_checkpoint: String,
    /// Weights the client sent back.
    pub client_checkpoint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub checkpoints: Vec<String>,
}

/// Trains the requested paradigms and writes checkpoints, curves and the
/// federated round log.
pub fn cmd_run(exp: &Experiment, paradigm: Option<Paradigm>) -> Result<RunReport> {
    let started = Instant::now();
    let config = &exp.config;
    config.validate()?;
    let layout = exp.layout()?;
    let spec = &config.model;
    let mut w = ArtifactWriter::new(&exp.out)?;
    let mut checkpoints = Vec::new();
    let mut save = |w: &mut ArtifactWriter, name: &str, params: &ParamVector| -> Result<()> {
        let rel = checkpoint_file(name);
        w.write(&rel, Checkpoint::new(spec, params).to_text())?;
        checkpoints.push(rel);
        Ok(())
    };

    for p in selected(paradigm) {
        match p {
            Paradigm::Local => {
                let runs: Vec<(u32, Result<(ParamVector, TrainingRunRecord)>)> = layout
                    .clients
                    .par_iter()
                    .map(|(&k, s)| (k, train_local(&s.train, &s.validation, spec, &config.train, exp.seed)))
                    .collect();
                let mut record = TrainingRunRecord::new(Paradigm::Local);
                for (k, run) in runs {
                    let (params, r) = run.map_err(|e| Error::client(k, e))?;
                    save(&mut w, &ModelSet::local_name(k), &params)?;
                    record.points.extend(r.points);
                }
                w.write("curves/ll.csv", curve_csv(&record))?;
            }
            Paradigm::Centralized => {
                let (params, record) = train_centralized(&layout, spec, &config.train, exp.seed)?;
                save(&mut w, "CL", &params)?;
                w.write("curves/cl.csv", curve_csv(&record))?;
            }
            Paradigm::Federated => {
                let run = run_federated(&layout, spec, &config.train, &config.rounds, exp.seed)?;
                save(&mut w, "FL", &run.global)?;
                w.write("curves/fl.csv", curve_csv(&run.record))?;
                let mut log = String::new();
                for r in &run.rounds {
                    let global_checkpoint = format!("checkpoints/fl_rounds/round_{}_global.json", r.round);
                    w.write(&global_checkpoint, Checkpoint::new(spec, &r.global_before).to_text())?;
                    for u in &r.updates {
                        let client_checkpoint =
                            format!("checkpoints/fl_rounds/round_{}_client_{}.json", r.round, u.client_id);
                        w.write(&client_checkpoint, Checkpoint::new(spec, &u.params).to_text())?;
                        let rec = RoundLogRecord {
                            round: r.round,
                            client_id: u.client_id,
                            n_samples: u.n_samples,
                            train_loss_end: u.train_loss_end(),
                            val_loss: u.val_loss,
                            val_accuracy: u.val_accuracy,
                            global_checkpoint: global_checkpoint.clone(),
                            client_checkpoint,
                        };
                        log.push_str(&serde_json::to_string(&rec).map_err(|e| Error::Serialization(e.to_string()))?);
                        log.push('\n');
                    }
                }
                w.write(ROUND_LOG, log)?;
            }
        }
    }
    exp.finish(w, &format!("run-{}", paradigm.map_or("all", Paradigm::short)), started)?;
    Ok(RunReport { checkpoints })
}

fn load_params(exp: &Experiment, name: &str) -> Result<ParamVector> {
    let ckpt = Checkpoint::load(&exp.checkpoint_path(name))?;
    if ckpt.spec != exp.config.model {
        return Err(Error::InvalidInput(format!(
            "checkpoint {name} was trained with a different model spec"
        )));
    }
    ckpt.params()
}

/// Two-level evaluation of the requested paradigms' checkpoints.
pub fn cmd_evaluate(exp: &Experiment, paradigm: Option<Paradigm>) -> Result<Evaluation> {
    let started = Instant::now();
    exp.config.validate()?;
    let layout = exp.layout()?;
    let mut models = ModelSet::default();
    for p in selected(paradigm) {
        match p {
            Paradigm::Local => {
                for &k in layout.clients.keys() {
                    models.local.insert(k, load_params(exp, &ModelSet::local_name(k))?);
                }
            }
            Paradigm::Centralized => models.centralized = Some(load_params(exp, "CL")?),
            Paradigm::Federated => models.federated = Some(load_params(exp, "FL")?),
        }
    }
    let evaluation = two_level_evaluate(&models, &exp.config.model, &layout)?;

    let mut w = ArtifactWriter::new(&exp.out)?;
    for (p, rows) in &evaluation.local {
        w.write(&format!("tables/local_{}.csv", p.short()), metrics_csv(rows))?;
    }
    w.write("tables/pooled_test.csv", metrics_csv(&evaluation.pooled_test))?;
    for (name, roc) in &evaluation.test_roc {
        w.write(&format!("roc/{}.csv", name.to_lowercase()), roc_csv(roc))?;
    }
    for (name, scores) in &evaluation.test_scores {
        let preds = Predictions {
            model_tag: name.clone(),
            kind: ScoreKind::Probability,
            scores: scores.clone(),
            labels: evaluation.test_labels.clone(),
        };
        w.write(&format!("scores/{}.csv", name.to_lowercase()), write_predictions(&preds))?;
    }
    w.write_json(EVALUATION_FILE, &evaluation)?;
    exp.finish(w, "evaluate", started)?;
    Ok(evaluation)
}

/// Significance table over the standard comparison plan.
pub fn cmd_stats(exp: &Experiment) -> Result<Vec<SignificanceRow>> {
    let started = Instant::now();
    let evaluation: Evaluation = read_json(&exp.out.join(EVALUATION_FILE))?;
    let client_ids: Vec<u32> = exp.config.cohort.clients.iter().map(|c| c.client_id).collect();
    let rows = build_significance_table(
        &AucEvidence::from(&evaluation),
        &standard_plan(&client_ids),
        exp.config.eval.alpha,
    )?;
    let mut w = ArtifactWriter::new(&exp.out)?;
    w.write("tables/significance.csv", SignificanceRow::to_csv(&rows))?;
    exp.finish(w, "stats", started)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rounds: Vec<RoundSummary>,
    pub flags: Vec<OutlierFlag>,
    pub z_threshold: f64,
    pub grid_version: String,
    pub j_curves: Vec<JCurve>,
    pub global_thresholds: Vec<AggregatedThreshold>,
}

fn read_round_log(exp: &Experiment) -> Result<Vec<RoundLogRecord>> {
    read_text(&exp.out.join(ROUND_LOG))?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() }))
        .collect()
}

fn load_checkpoint_params(exp: &Experiment, rel: &str) -> Result<ParamVector> {
    Checkpoint::load(&exp.out.join(rel))?.params()
}

/// Server-side diagnostics from the federated round log, plus global
/// thresholds aggregated from client-computed J-curves of the final model.
pub fn cmd_monitor(exp: &Experiment) -> Result<Diagnostics> {
    let started = Instant::now();
    let log = read_round_log(exp)?;
    let mut by_round: BTreeMap<usize, Vec<RoundLogRecord>> = BTreeMap::new();
    for rec in log {
        by_round.entry(rec.round).or_default().push(rec);
    }
    let mut rounds = Vec::new();
    for (round, records) in &by_round {
        let global = load_checkpoint_params(exp, &records[0].global_checkpoint)?;
        let updates = records
            .iter()
            .map(|r| {
                Ok(ClientUpdate {
                    client_id: r.client_id,
                    params: load_checkpoint_params(exp, &r.client_checkpoint)?,
                    n_samples: r.n_samples,
                    train_loss_trace: Vec::new(),
                    batches_per_epoch: 0,
                    epoch_train_loss: vec![r.train_loss_end],
                    val_loss: r.val_loss,
                    val_accuracy: r.val_accuracy,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rounds.push(summarize_round(*round, &global, &updates)?);
    }
    let policy = OutlierPolicy {
        z_threshold: exp.config.monitor.z_threshold,
        min_deviation: exp.config.monitor.min_deviation,
    };
    let flags = flag_outlier_clients(&rounds, &policy)?;

    let grid = ThresholdGrid::uniform(exp.config.eval.grid_size)?;
    let global = load_params(exp, "FL")?;
    let layout = exp.layout()?;
    let j_curves = layout
        .clients
        .iter()
        .map(|(&k, s)| compute_j_curve(k, &global, &exp.config.model, &s.validation, &grid).map_err(|e| Error::client(k, e)))
        .collect::<Result<Vec<_>>>()?;
    let global_thresholds = crate::monitor::AggregationRule::ALL
        .iter()
        .map(|&rule| aggregate_thresholds(&j_curves, rule))
        .collect::<Result<Vec<_>>>()?;

    let diagnostics = Diagnostics {
        rounds,
        flags,
        z_threshold: policy.z_threshold,
        grid_version: grid.version,
        j_curves,
        global_thresholds,
    };
    let mut w = ArtifactWriter::new(&exp.out)?;
    let mut norms = String::from("round,client_id,update_norm,mean_cosine,train_loss_end,val_loss,val_accuracy\n");
    for r in &diagnostics.rounds {
        for (i, u) in r.updates.iter().enumerate() {
            norms.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                u.round,
                u.client_id,
                u.update_norm,
                r.similarity.mean_off_diagonal(i),
                u.train_loss_end,
                u.val_loss,
                u.val_accuracy
            ));
        }
        let mut sim = String::from("client_id");
        for k in &r.similarity.client_ids {
            sim.push_str(&format!(",{k}"));
        }
        sim.push('\n');
        for (k, row) in r.similarity.client_ids.iter().zip(&r.similarity.values) {
            sim.push_str(&k.to_string());
            for v in row {
                sim.push_str(&format!(",{v}"));
            }
            sim.push('\n');
        }
        w.write(&format!("diagnostics/similarity_round_{}.csv", r.round), sim)?;
    }
    w.write("diagnostics/norms.csv", norms)?;
    w.write_json("diagnostics.json", &diagnostics)?;
    exp.finish(w, "monitor", started)?;
    Ok(diagnostics)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSeed {
    pub seed: u64,
    pub cl_auc: f64,
    pub fl_auc: f64,
    pub mean_ll_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seeds: Vec<BenchSeed>,
    pub median_cl: f64,
    pub median_fl: f64,
    pub median_mean_ll: f64,
    /// `median CL >= median FL >= median mean-LL`.
    pub pass: bool,
}

impl BenchReport {
    pub fn cl_minus_ll(&self) -> f64 {
        self.median_cl - self.median_mean_ll
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6} {:>8} {:>8} {:>8}", "seed", "CL", "FL", "mean LL")?;
        for s in &self.seeds {
            writeln!(f, "{:>6} {:>8.4} {:>8.4} {:>8.4}", s.seed, s.cl_auc, s.fl_auc, s.mean_ll_auc)?;
        }
        writeln!(
            f,
            "{:>6} {:>8.4} {:>8.4} {:>8.4}",
            "median", self.median_cl, self.median_fl, self.median_mean_ll
        )?;
        write!(f, "{}", if self.pass { "PASS" } else { "FAIL" })
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn bench_seed(exp: &Experiment) -> Result<BenchSeed> {
    cmd_synth(exp)?;
    cmd_run(exp, None)?;
    let ev = cmd_evaluate(exp, None)?;
    let auc = |name: &str| {
        ev.test_auc(name)
            .ok_or_else(|| Error::AucUndefined(format!("seed {}: no test AUC for {name}", exp.seed)))
    };
    let ll: Vec<f64> = ev
        .pooled_test
        .iter()
        .filter(|r| r.paradigm == Paradigm::Local)
        .map(|r| r.report.auc.ok_or_else(|| Error::AucUndefined(r.model.clone())))
        .collect::<Result<_>>()?;
    Ok(BenchSeed {
        seed: exp.seed,
        cl_auc: auc("CL")?,
        fl_auc: auc("FL")?,
        mean_ll_auc: ll.iter().sum::<f64>() / ll.len() as f64,
    })
}

/// synth -> run all -> evaluate for `seeds` consecutive master seeds, each in
/// its own `seed_<s>` subdirectory, then compares median test AUCs.
pub fn cmd_bench(exp: &Experiment, seeds: Option<usize>) -> Result<BenchReport> {
    let started = Instant::now();
    let n = seeds.unwrap_or(exp.config.bench.seeds);
    if n == 0 {
        return Err(Error::InvalidConfig("bench.seeds: must be >= 1".into()));
    }
    exp.config.validate()?;
    let runs: Vec<Result<BenchSeed>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let seed = exp.seed + i;
            bench_seed(&exp.child(seed, exp.out.join(format!("seed_{seed}"))))
        })
        .collect();
    let seeds: Vec<BenchSeed> = runs.into_iter().collect::<Result<_>>()?;
    let pick = |f: fn(&BenchSeed) -> f64| median(&seeds.iter().map(f).collect::<Vec<_>>());
    let (median_cl, median_fl, median_mean_ll) = (pick(|s| s.cl_auc), pick(|s| s.fl_auc), pick(|s| s.mean_ll_auc));
    let report = BenchReport {
        pass: median_cl >= median_fl && median_fl >= median_mean_ll,
        seeds,
        median_cl,
        median_fl,
        median_mean_ll,
    };
    let mut w = ArtifactWriter::new(&exp.out)?;
    let mut csv = String::from("seed,cl_auc,fl_auc,mean_ll_auc\n");
    for s in &report.seeds {
        csv.push_str(&format!("{},{},{},{}\n", s.seed, s.cl_auc, s.fl_auc, s.mean_ll_auc));
    }
    csv.push_str(&format!("median,{},{},{}\n", median_cl, median_fl, median_mean_ll));
    w.write("bench/summary.csv", csv)?;
    w.write_json("bench/summary.json", &report)?;
    exp.finish(w, "bench", started)?;
    Ok(report)
}

/// Relative paths of every manifest-listed file under `dir`, recursively
/// including per-seed bench directories.
pub fn listed_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if let Some(m) = RunManifest::load(dir)? {
        out.extend(m.files.keys().map(PathBuf::from));
    }
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir() && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("seed_")))
        .collect();
    subdirs.sort();
    for sub in subdirs {
        let name = PathBuf::from(sub.file_name().expect("named dir"));
        out.extend(listed_files(&sub)?.into_iter().map(|p| name.join(p)));
    }
    Ok(out)
}
