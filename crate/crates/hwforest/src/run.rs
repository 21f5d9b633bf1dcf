//! Command implementations shared by the binary and the integration tests.

use std::path::PathBuf;
use std::time::Instant;

use hwforest_core::cascade::{self, CascadeFit, CascadeModel, Prediction};
use hwforest_core::dataset::{split_indices, SplitSpec};
use hwforest_core::evalstats::{self, PairedSample, RankTable};
use hwforest_core::rng::derive_seed;
use hwforest_core::{Dataset, Error as CoreError, FoldPlan, Screening};
use serde::Serialize;

use crate::atomic::write_all_atomic;
use crate::config::{check_data_paths, DataFormat, DataPaths, RunConfig};
use crate::csv_io::{self, CsvSchema};
use crate::dumps;
use crate::error::{Error, Result};
use crate::idx;
use crate::model_file::ModelFile;
use crate::report::{grain_reports, level_reports, EvalReport, Report};

const SPLIT_STREAM: u64 = 101;
const SUBSAMPLE_STREAM: u64 = 102;
const BENCH_STREAM: u64 = 103;

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Option<Dataset>,
    pub schema: Option<CsvSchema>,
}

fn load_set(cfg: &RunConfig, d: &DataPaths, schema: Option<&CsvSchema>, n_classes: usize) -> Result<Dataset> {
    match cfg.format {
        DataFormat::Idx => {
            let labels = d.labels.as_ref().ok_or(Error::MissingSetting("<set>.labels"))?;
            idx::load_idx_pair_with_classes(&d.path, labels, n_classes)
        }
        DataFormat::Csv => csv_io::load_csv_with_schema(&d.path, schema.expect("schema learned from train")),
    }
}

/// Keeps a stratified `fraction` of `d`.
pub fn subsample(d: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if fraction >= 1.0 || d.n_instances() < 2 {
        return Ok(d.clone());
    }
    let (keep, _) = split_indices(d, &SplitSpec::new(fraction, derive_seed(seed, SUBSAMPLE_STREAM, 0), true))?;
    Ok(d.subset(&keep))
}

/// Loads every configured set. Paths are checked before any file is read.
pub fn load_data(cfg: &RunConfig, need_test: bool) -> Result<LoadedData> {
    cfg.check_paths(need_test)?;
    let train_paths = cfg.train.as_ref().ok_or(Error::MissingSetting("train"))?;
    let (train, schema) = match cfg.format {
        DataFormat::Idx => {
            let labels = train_paths.labels.as_ref().ok_or(Error::MissingSetting("train.labels"))?;
            (idx::load_idx_pair(&train_paths.path, labels)?, None)
        }
        DataFormat::Csv => {
            let (d, s) = csv_io::load_csv(&train_paths.path, &cfg.csv)?;
            (d, Some(s))
        }
    };
    let k = train.n_classes();
    let seed = cfg.cascade.seed;
    let train = subsample(&train, cfg.subsample, seed)?;
    let test = match &cfg.test {
        Some(t) => Some(subsample(&load_set(cfg, t, schema.as_ref(), k)?, cfg.subsample, seed)?),
        None => None,
    };
    let (train, validation) = match &cfg.validation {
        Some(v) => (train, subsample(&load_set(cfg, v, schema.as_ref(), k)?, cfg.subsample, seed)?),
        None => {
            let spec = SplitSpec::new(1.0 - cfg.validation_fraction, derive_seed(seed, SPLIT_STREAM, 0), true);
            let (a, b) = split_indices(&train, &spec)?;
            (train.subset(&a), train.subset(&b))
        }
    };
    Ok(LoadedData { train, validation, test, schema })
}

pub struct FitOutcome {
    pub fit: CascadeFit,
    pub predictions: Option<Vec<Prediction>>,
    pub report: Report,
}

/// Trains, predicts the test set if present, and times both.
pub fn fit_eval(cfg: &RunConfig, data: &LoadedData) -> Result<FitOutcome> {
    let start = Instant::now();
    let fit = cascade::fit(&data.train, &data.validation, &cfg.cascade)?;
    let predictions = match &data.test {
        Some(t) => Some(fit.model.predict_batch(t)?),
        None => None,
    };
    let wall = start.elapsed().as_secs_f64();
    let accuracy = match (&data.test, &predictions) {
        (Some(t), Some(p)) => {
            let predicted: Vec<usize> = p.iter().map(|p| p.distribution.predicted()).collect();
            Some(evalstats::accuracy(&predicted, t.labels())?)
        }
        _ => None,
    };
    let report = Report {
        accuracy,
        levels: level_reports(&fit, predictions.as_deref()),
        grains: grain_reports(&fit.model),
        wall_time_seconds: wall,
        n_train: data.train.n_instances(),
        n_validation: data.validation.n_instances(),
        n_test: data.test.as_ref().map_or(0, Dataset::n_instances),
        discarded_level_validation_accuracy: fit.discarded_validation_accuracy,
        config: cfg.clone(),
    };
    Ok(FitOutcome { fit, predictions, report })
}

/// `train`: writes `model.json`, `report.json` and optional dumps to `out`.
pub fn cmd_train(cfg: &RunConfig) -> Result<Report> {
    let data = load_data(cfg, false)?;
    let outcome = fit_eval(cfg, &data)?;
    let model = ModelFile::new(outcome.fit.model.clone(), data.schema.clone());
    let mut files = vec![
        ("model.json".to_string(), model.to_bytes()?),
        ("report.json".to_string(), outcome.report.to_json().into_bytes()),
    ];
    if cfg.dumps {
        files.extend(dumps::all(&outcome.fit));
    }
    write_all_atomic(&cfg.out, &files)?;
    Ok(outcome.report)
}

/// `eval`: scores a saved model on the configured test set.
pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalReport> {
    let test_paths = cfg.test.as_ref().ok_or(Error::MissingSetting("test"))?;
    check_data_paths(cfg.format, test_paths)?;
    let model_path = cfg.model.clone().unwrap_or_else(|| cfg.out.join("model.json"));
    let file = ModelFile::load(&model_path)?;
    let start = Instant::now();
    let test = load_set(cfg, test_paths, file.schema.as_ref(), file.model.n_classes())?;
    let preds = file.model.predict_batch(&test)?;
    let predicted: Vec<usize> = preds.iter().map(|p| p.distribution.predicted()).collect();
    let report = EvalReport {
        accuracy: evalstats::accuracy(&predicted, test.labels())?,
        n_test: test.n_instances(),
        exits_per_level: CascadeModel::exit_counts(&preds, file.model.n_levels()),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
    };
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    write_all_atomic(&cfg.out, &[("eval_report.json".to_string(), body.into_bytes())])?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmResult {
    pub name: String,
    pub hash_screen: bool,
    pub screening: Screening,
    pub fold_accuracies: Vec<f64>,
    pub fold_wall_times: Vec<f64>,
    pub retained_locations: Vec<usize>,
    pub mean_accuracy: f64,
    pub mean_wall_time_seconds: f64,
}

/// `paired_t` outcome; degenerate cases are reported rather than hidden.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairedT {
    Statistic(f64),
    ZeroVariance,
    InsufficientFolds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedRow {
    pub arm: String,
    pub baseline: String,
    pub accuracy_deltas: Vec<f64>,
    pub mean_accuracy_delta: f64,
    pub mean_time_delta_seconds: f64,
    pub paired_t: PairedT,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub arms: Vec<ArmResult>,
    pub summary: Vec<PairedRow>,
    pub config: RunConfig,
}

fn arm_name(hash: bool, s: Screening) -> String {
    let screening = match s {
        Screening::Window => "window".to_string(),
        Screening::Binning { bins } => format!("binning{bins}"),
        Screening::None => "none".to_string(),
    };
    format!("hash_{}__{screening}", if hash { "on" } else { "off" })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Paired t over per-fold accuracy differences.
pub fn paired_summary(a: &[f64], b: &[f64]) -> PairedT {
    match PairedSample::from_pairs(a, b).and_then(|s| evalstats::paired_t(&s)) {
        Ok(t) => PairedT::Statistic(t),
        Err(CoreError::ZeroVariance) => PairedT::ZeroVariance,
        Err(_) => PairedT::InsufficientFolds,
    }
}

/// Train/test pairs for the bench: k stratified folds of the training data,
/// or the configured split once.
fn bench_splits(cfg: &RunConfig, data: &LoadedData) -> Result<Vec<LoadedData>> {
    if cfg.bench.folds < 2 {
        if data.test.is_none() {
            return Err(Error::MissingSetting("test"));
        }
        return Ok(vec![data.clone()]);
    }
    let all = &data.train;
    let plan = FoldPlan::stratified(all.labels(), cfg.bench.folds, derive_seed(cfg.cascade.seed, BENCH_STREAM, 0))?;
    (0..plan.k())
        .map(|f| {
            let held: Vec<usize> = (0..all.n_instances()).filter(|&i| plan.fold_of(i) == f).collect();
            let rest: Vec<usize> = (0..all.n_instances()).filter(|&i| plan.fold_of(i) != f).collect();
            Ok(LoadedData {
                train: all.subset(&rest),
                validation: data.validation.clone(),
                test: Some(all.subset(&held)),
                schema: data.schema.clone(),
            })
        })
        .collect()
}

/// `bench`: every (hash screening x confidence screening) arm on the same
/// splits, compared against the first arm.
pub fn cmd_bench(cfg: &RunConfig) -> Result<BenchReport> {
    let data = load_data(cfg, cfg.bench.folds < 2)?;
    let splits = bench_splits(cfg, &data)?;
    let mut arms = Vec::new();
    let mut files = Vec::new();
    for &hash in &cfg.bench.hash {
        for &screening in &cfg.bench.screening {
            let mut arm_cfg = cfg.clone();
            arm_cfg.scan_mut().hash_screen = hash;
            arm_cfg.cascade.screening = screening;
            let name = arm_name(hash, screening);
            let mut accs = Vec::new();
            let mut times = Vec::new();
            let mut retained = Vec::new();
            for (f, split) in splits.iter().enumerate() {
                let out = fit_eval(&arm_cfg, split)?;
                accs.push(out.report.accuracy.unwrap_or(0.0));
                times.push(out.report.wall_time_seconds);
                retained.push(out.report.total_retained_locations());
                files.push((format!("report_{name}_fold{f}.json"), out.report.to_json().into_bytes()));
            }
            arms.push(ArmResult {
                name,
                hash_screen: hash,
                screening,
                mean_accuracy: mean(&accs),
                mean_wall_time_seconds: mean(&times),
                fold_accuracies: accs,
                fold_wall_times: times,
                retained_locations: retained,
            });
        }
    }
    let base = arms.first().ok_or(Error::MissingSetting("bench arms"))?;
    let summary = arms
        .iter()
        .skip(1)
        .map(|a| {
            let deltas: Vec<f64> = a.fold_accuracies.iter().zip(&base.fold_accuracies).map(|(x, y)| x - y).collect();
            PairedRow {
                arm: a.name.clone(),
                baseline: base.name.clone(),
                mean_accuracy_delta: mean(&deltas),
                mean_time_delta_seconds: a.mean_wall_time_seconds - base.mean_wall_time_seconds,
                paired_t: paired_summary(&a.fold_accuracies, &base.fold_accuracies),
                accuracy_deltas: deltas,
            }
        })
        .collect();
    let report = BenchReport { arms, summary, config: cfg.clone() };
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    files.push(("bench_report.json".to_string(), body.into_bytes()));
    write_all_atomic(&cfg.out, &files)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub models: Vec<String>,
    pub datasets: Vec<String>,
    pub mean_ranks: Vec<f64>,
    pub friedman_chi2: f64,
    pub friedman: Option<f64>,
    pub q_alpha: f64,
    pub critical_difference: f64,
}

impl StatsReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("datasets: {}\nmodels: {}\n\n", self.datasets.len(), self.models.len()));
        s.push_str("model                mean_rank\n");
        for (m, r) in self.models.iter().zip(&self.mean_ranks) {
            s.push_str(&format!("{m:<20} {r:>9.4}\n"));
        }
        s.push_str(&format!("\nfriedman_chi2: {:.4}\n", self.friedman_chi2));
        match self.friedman {
            Some(f) => s.push_str(&format!("friedman_f: {f:.4}\n")),
            None => s.push_str("friedman_f: degenerate\n"),
        }
        s.push_str(&format!("nemenyi_cd (q = {}): {:.4}\n", self.q_alpha, self.critical_difference));
        s
    }
}

/// `stats`: mean ranks, Friedman statistic and Nemenyi CD of an accuracy
/// table.
pub fn cmd_stats(input: &std::path::Path, q_alpha: f64, out: Option<&PathBuf>) -> Result<StatsReport> {
    let table = csv_io::load_accuracy_table(input)?;
    let rt = RankTable::from_accuracies(&table.rows)?;
    let report = StatsReport {
        mean_ranks: rt.mean_ranks().to_vec(),
        friedman_chi2: evalstats::friedman_chi2(&rt),
        friedman: evalstats::friedman(&rt).ok(),
        q_alpha,
        critical_difference: evalstats::nemenyi_cd(rt.n_models(), rt.n_datasets(), q_alpha),
        models: table.models,
        datasets: table.datasets,
    };
    if let Some(dir) = out {
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        write_all_atomic(
            dir,
            &[("stats.json".to_string(), json.into_bytes()), ("stats.txt".to_string(), report.to_text().into_bytes())],
        )?;
    }
    Ok(report)
}
