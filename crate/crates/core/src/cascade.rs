//! Level-wise cascade.
//!
//! At every level the surviving training instances are fed to each forest
//! through k-fold cross-validation, producing out-of-fold class vectors.
//! Their average gives each instance a confidence, the level's target
//! accuracy `TA` follows from the out-of-fold accuracy, and the configured
//! screening picks the threshold `WT`. Instances above `WT` retire; the rest
//! move on with the level's class vectors appended to their base features.
//! Growth stops at `max_levels`, when nothing survives, or when a new level
//! fails to improve validation accuracy (that level is then discarded).
//!
//! Image datasets pass through [`ScanModel`] first and its output becomes the
//! base features.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::conf_screen::{self, ConfidenceRecord, Threshold};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{argmax, confidence, oof_class_vectors, ClassDistribution, FoldPlan, ForestKind, ForestModel};
use crate::par::map_indexed;
use crate::rng::{derive_seed, stream};
use crate::scanning::{GrainConfig, ScanConfig, ScanModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Screening {
    Window,
    Binning { bins: usize },
    None,
}

/// `TA = 1 - (1 - A) * error_fraction`, where `A` is the level's
/// out-of-fold accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaRule {
    pub error_fraction: f64,
}

impl Default for TaRule {
    fn default() -> Self {
        Self { error_fraction: 0.5 }
    }
}

impl TaRule {
    pub fn target(&self, oof_accuracy: f64) -> f64 {
        1.0 - (1.0 - oof_accuracy) * self.error_fraction
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub forests: Vec<ForestKind>,
    pub trees_per_forest: usize,
    pub cv_folds: usize,
    pub max_levels: usize,
    pub screening: Screening,
    pub ta_rule: TaRule,
    pub seed: u64,
    /// Used only for datasets with an image shape.
    pub scan: Option<ScanConfig>,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            forests: vec![ForestKind::Random, ForestKind::CompletelyRandom],
            trees_per_forest: 50,
            cv_folds: 5,
            max_levels: 10,
            screening: Screening::Window,
            ta_rule: TaRule::default(),
            seed: 0,
            scan: Some(ScanConfig::default()),
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.forests.is_empty() {
            return Err(Error::InvalidConfig("no cascade forests"));
        }
        if self.trees_per_forest == 0 {
            return Err(Error::NoTrees);
        }
        if self.cv_folds < 2 {
            return Err(Error::FoldCountTooSmall(self.cv_folds));
        }
        if self.max_levels == 0 {
            return Err(Error::InvalidConfig("max_levels must be at least 1"));
        }
        if !(self.ta_rule.error_fraction >= 0.0 && self.ta_rule.error_fraction <= 1.0) {
            return Err(Error::InvalidConfig("error_fraction must lie in [0, 1]"));
        }
        if let Screening::Binning { bins: 0 } = self.screening {
            return Err(Error::InvalidConfig("binning needs at least one bin"));
        }
        if let Some(scan) = &self.scan {
            if scan.grains.iter().any(|g: &GrainConfig| g.n_trees == 0) {
                return Err(Error::NoTrees);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeLevel {
    pub index: usize,
    pub forests: Vec<ForestModel>,
    pub threshold: Threshold,
    pub ta: f64,
    pub oof_accuracy: f64,
    pub n_entering: usize,
    /// Training instances above the threshold.
    pub n_high: usize,
    /// Training instances that take their final prediction here. Equals
    /// `n_entering` at the last level.
    pub n_retired: usize,
    pub validation_accuracy: f64,
    pub input_width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeModel {
    pub scan: Option<ScanModel>,
    pub raw_features: usize,
    pub base_width: usize,
    pub n_classes: usize,
    pub levels: Vec<CascadeLevel>,
}

/// Outcome of one prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub distribution: ClassDistribution,
    /// 0-based level that produced the answer.
    pub exit_level: usize,
    pub levels_evaluated: usize,
}

/// One training instance in a level's confidence ranking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub instance: usize,
    pub confidence: f64,
    pub correct: bool,
    pub high: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeFit {
    pub model: CascadeModel,
    /// Level whose training-time distribution is final, per training instance.
    pub train_exit_level: Vec<usize>,
    /// Validation accuracy of a trained level rejected by the stopping rule.
    pub discarded_validation_accuracy: Option<f64>,
    /// Ranked out-of-fold confidences of every accepted level.
    pub rankings: Vec<Vec<RankedEntry>>,
}

fn screen(ranked: &[ConfidenceRecord], screening: Screening, ta: f64) -> Result<Threshold> {
    let ta = ta.clamp(f64::MIN_POSITIVE, 1.0);
    match screening {
        Screening::None => Ok(Threshold::PassNone),
        Screening::Window => match conf_screen::window_threshold(ranked, ta) {
            Ok(w) => Ok(w.partition.threshold),
            Err(Error::TooFewInstances(_)) => Ok(Threshold::PassNone),
            Err(e) => Err(e),
        },
        Screening::Binning { bins } => {
            if ranked.is_empty() {
                return Ok(Threshold::PassNone);
            }
            Ok(conf_screen::binning_threshold(ranked, bins.min(ranked.len()), ta)?.partition.threshold)
        }
    }
}

/// Level input rows: base features followed by the previous level's class
/// vectors (absent at level 0).
fn level_input(base: &Dataset, members: &[usize], prev: Option<&[f64]>, prev_width: usize) -> Result<Dataset> {
    let width = base.n_features() + prev_width;
    let mut features = Vec::with_capacity(members.len() * width);
    for (pos, &i) in members.iter().enumerate() {
        features.extend_from_slice(base.row(i));
        if let Some(p) = prev {
            features.extend_from_slice(&p[pos * prev_width..(pos + 1) * prev_width]);
        }
    }
    let labels = members.iter().map(|&i| base.label(i)).collect();
    Dataset::with_classes(features, width, labels, base.n_classes())
}

/// Averages `forests.len()` blocks of `K` into one distribution.
fn average_blocks(vectors: &[f64], k: usize) -> Vec<f64> {
    let n = vectors.len() / k;
    let mut avg = vec![0.0; k];
    for block in vectors.chunks_exact(k) {
        for (a, v) in avg.iter_mut().zip(block) {
            *a += v;
        }
    }
    avg.iter_mut().for_each(|a| *a /= n as f64);
    avg
}

fn check_compatible(train: &Dataset, other: &Dataset) -> Result<()> {
    if other.n_features() != train.n_features() {
        return Err(Error::DimensionMismatch { expected: train.n_features(), got: other.n_features() });
    }
    if other.n_classes() != train.n_classes() {
        return Err(Error::ClassCountMismatch { expected: train.n_classes(), got: other.n_classes() });
    }
    if other.image_shape() != train.image_shape() {
        let (h, w) = train.image_shape().or(other.image_shape()).unwrap_or((0, 0));
        return Err(Error::ShapeMismatch { height: h, width: w, n_features: other.n_features() });
    }
    Ok(())
}

/// Validation instances still undecided, with their latest class vectors.
struct PendingSet {
    members: Vec<usize>,
    vectors: Option<Vec<f64>>,
}

pub fn fit(train: &Dataset, validation: &Dataset, cfg: &CascadeConfig) -> Result<CascadeFit> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if validation.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_compatible(train, validation)?;

    let scan = match (&cfg.scan, train.image_shape()) {
        (Some(sc), Some(_)) => Some(ScanModel::fit(train, sc, cfg.seed)?),
        _ => None,
    };
    let (base, val_base) = match &scan {
        Some(s) => (s.transform(train)?, s.transform(validation)?),
        None => (train.clone(), validation.clone()),
    };
    let k = train.n_classes();
    let n_forests = cfg.forests.len();
    let block = n_forests * k;

    let mut levels: Vec<CascadeLevel> = Vec::new();
    let mut train_exit = vec![0usize; train.n_instances()];
    let mut survivors: Vec<usize> = (0..train.n_instances()).collect();
    let mut train_vectors: Option<Vec<f64>> = None;
    let mut val = PendingSet { members: (0..validation.n_instances()).collect(), vectors: None };
    let mut val_correct_retired = 0usize;
    let mut discarded = None;
    let mut rankings = Vec::new();

    for t in 0..cfg.max_levels {
        if survivors.len() < cfg.cv_folds {
            break;
        }
        let level_seed = derive_seed(cfg.seed, stream::LEVEL, t as u64);
        let prev_width = if t == 0 { 0 } else { block };
        let input = level_input(&base, &survivors, train_vectors.as_deref(), prev_width)?;
        let plan = FoldPlan::stratified(input.labels(), cfg.cv_folds, level_seed)?;
        let all: Vec<usize> = (0..input.n_instances()).collect();

        let trained = map_indexed(n_forests, |f| -> Result<(Vec<f64>, ForestModel)> {
            let fs = derive_seed(level_seed, stream::FOREST, f as u64);
            let oof = oof_class_vectors(&input, cfg.forests[f], cfg.trees_per_forest, &plan, fs)?;
            let forest = ForestModel::fit(&input, &all, cfg.forests[f], cfg.trees_per_forest, fs)?;
            Ok((oof, forest))
        });
        let mut oofs = Vec::with_capacity(n_forests);
        let mut forests = Vec::with_capacity(n_forests);
        for r in trained {
            let (o, f) = r?;
            oofs.push(o);
            forests.push(f);
        }

        // Per-survivor concatenated class vectors (one K block per forest).
        let m = survivors.len();
        let mut vectors = vec![0.0; m * block];
        for (f, oof) in oofs.iter().enumerate() {
            for i in 0..m {
                vectors[i * block + f * k..i * block + (f + 1) * k].copy_from_slice(&oof[i * k..(i + 1) * k]);
            }
        }
        let records: Vec<ConfidenceRecord> = (0..m)
            .map(|i| ConfidenceRecord::new(i, average_blocks(&vectors[i * block..(i + 1) * block], k), input.label(i)))
            .collect();
        let oof_accuracy = records.iter().filter(|r| r.is_correct()).count() as f64 / m as f64;
        let ta = cfg.ta_rule.target(oof_accuracy);
        let ranked = conf_screen::rank(records.clone());
        let threshold = screen(&ranked, cfg.screening, ta)?;

        // Validation: this level answers everything still pending.
        let val_input = level_input(&val_base, &val.members, val.vectors.as_deref(), prev_width)?;
        let level_view = LevelView { forests: &forests, k };
        let val_vectors = level_view.vectors(&val_input)?;
        let mut val_high_correct = 0usize;
        let mut val_all_correct = 0usize;
        let mut val_next = Vec::new();
        let mut val_next_vectors = Vec::new();
        for (pos, &i) in val.members.iter().enumerate() {
            let v = &val_vectors[pos * block..(pos + 1) * block];
            let avg = average_blocks(v, k);
            let correct = argmax(&avg) == validation.label(i);
            val_all_correct += usize::from(correct);
            if threshold.is_high(confidence(&avg)) {
                val_high_correct += usize::from(correct);
            } else {
                val_next.push(i);
                val_next_vectors.extend_from_slice(v);
            }
        }
        let validation_accuracy = (val_correct_retired + val_all_correct) as f64 / validation.n_instances() as f64;
        if let Some(prev) = levels.last() {
            if validation_accuracy <= prev.validation_accuracy {
                discarded = Some(validation_accuracy);
                break;
            }
        }

        let mut next = Vec::new();
        let mut next_vectors = Vec::new();
        for (pos, r) in records.iter().enumerate() {
            if threshold.is_high(r.confidence) {
                train_exit[survivors[pos]] = t;
            } else {
                next.push(survivors[pos]);
                next_vectors.extend_from_slice(&vectors[pos * block..(pos + 1) * block]);
            }
        }
        for &i in &next {
            train_exit[i] = t;
        }
        let n_high = m - next.len();
        rankings.push(
            ranked
                .iter()
                .map(|r| RankedEntry {
                    instance: survivors[r.instance_id],
                    confidence: r.confidence,
                    correct: r.is_correct(),
                    high: threshold.is_high(r.confidence),
                })
                .collect(),
        );
        levels.push(CascadeLevel {
            index: t,
            forests,
            threshold,
            ta,
            oof_accuracy,
            n_entering: m,
            n_high,
            n_retired: n_high,
            validation_accuracy,
            input_width: input.n_features(),
        });
        survivors = next;
        train_vectors = Some(next_vectors);
        val_correct_retired += val_high_correct;
        val = PendingSet { members: val_next, vectors: Some(val_next_vectors) };
        if survivors.is_empty() {
            break;
        }
    }

    let last =
        levels.last_mut().ok_or(Error::TooFewForFolds { instances: train.n_instances(), folds: cfg.cv_folds })?;
    last.n_retired = last.n_entering;
    let model =
        CascadeModel { raw_features: train.n_features(), base_width: base.n_features(), n_classes: k, scan, levels };
    Ok(CascadeFit { model, train_exit_level: train_exit, discarded_validation_accuracy: discarded, rankings })
}

const ROW_CHUNK: usize = 256;

struct LevelView<'a> {
    forests: &'a [ForestModel],
    k: usize,
}

impl LevelView<'_> {
    /// Concatenated forest outputs for every row of `input`.
    fn vectors(&self, input: &Dataset) -> Result<Vec<f64>> {
        let k = self.k;
        let block = self.forests.len() * k;
        let n = input.n_instances();
        let mut all = vec![0.0; n * block];
        let mut probs = vec![0.0; n * k];
        for (f, forest) in self.forests.iter().enumerate() {
            let parts = map_indexed(n.div_ceil(ROW_CHUNK), |c| -> Result<Vec<f64>> {
                let (a, b) = (c * ROW_CHUNK, ((c + 1) * ROW_CHUNK).min(n));
                let nf = input.n_features();
                let mut part = vec![0.0; (b - a) * k];
                forest.predict_rows_into(&input.features()[a * nf..b * nf], &mut part)?;
                Ok(part)
            });
            for (c, part) in parts.into_iter().enumerate() {
                let part = part?;
                probs[c * ROW_CHUNK * k..c * ROW_CHUNK * k + part.len()].copy_from_slice(&part);
            }
            for (i, p) in probs.chunks_exact(k).enumerate() {
                all[i * block + f * k..i * block + (f + 1) * k].copy_from_slice(p);
            }
        }
        Ok(all)
    }
}

impl CascadeModel {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn base_features(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.raw_features {
            return Err(Error::DimensionMismatch { expected: self.raw_features, got: x.len() });
        }
        match &self.scan {
            Some(s) => {
                let mut out = vec![0.0; s.output_width()];
                s.transform_into(x, &mut out)?;
                Ok(out)
            }
            None => Ok(x.to_vec()),
        }
    }

    /// Walks levels until one is confident enough; the last level always
    /// answers.
    pub fn predict_traced(&self, x: &[f64]) -> Result<Prediction> {
        let base = self.base_features(x)?;
        let k = self.n_classes;
        let mut input = base.clone();
        for (t, level) in self.levels.iter().enumerate() {
            let mut vectors = vec![0.0; level.forests.len() * k];
            for (f, forest) in level.forests.iter().enumerate() {
                forest.predict_into(&input, &mut vectors[f * k..(f + 1) * k])?;
            }
            let avg = average_blocks(&vectors, k);
            if t + 1 == self.levels.len() || level.threshold.is_high(confidence(&avg)) {
                return Ok(Prediction {
                    distribution: ClassDistribution::new(avg),
                    exit_level: t,
                    levels_evaluated: t + 1,
                });
            }
            input.truncate(base.len());
            input.extend_from_slice(&vectors);
        }
        Err(Error::InvalidConfig("model has no levels"))
    }

    pub fn predict(&self, x: &[f64]) -> Result<ClassDistribution> {
        self.predict_traced(x).map(|p| p.distribution)
    }

    pub fn predict_batch(&self, d: &Dataset) -> Result<Vec<Prediction>> {
        map_indexed(d.n_instances(), |i| self.predict_traced(d.row(i))).into_iter().collect()
    }

    /// Test instances exiting at each level.
    pub fn exit_counts(predictions: &[Prediction], n_levels: usize) -> Vec<usize> {
        let mut counts = vec![0; n_levels];
        for p in predictions {
            counts[p.exit_level] += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    /// Two Gaussian-ish blobs; `overlap` pulls the class means together.
    fn blobs(n: usize, overlap: f64, seed: u64) -> Dataset {
        let mut rng = rng_from_seed(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let centre = if c == 0 { -1.0 + overlap } else { 1.0 - overlap };
            for _ in 0..4 {
                features.push(centre + rng.random_range(-1.0..1.0));
            }
            labels.push(c);
        }
        Dataset::with_classes(features, 4, labels, 2).unwrap()
    }

    fn small_cfg(screening: Screening, max_levels: usize) -> CascadeConfig {
        CascadeConfig {
            trees_per_forest: 8,
            cv_folds: 3,
            max_levels,
            screening,
            seed: 17,
            scan: None,
            ..CascadeConfig::default()
        }
    }

    #[test]
    fn ta_rule_halves_error() {
        assert_eq!(TaRule::default().target(0.8), 0.9);
        assert_eq!(TaRule::default().target(1.0), 1.0);
    }

    #[test]
    fn separable_data_reaches_full_validation_accuracy() {
        let train = blobs(80, -1.5, 1);
        let val = blobs(40, -1.5, 2);
        let fit = fit(&train, &val, &small_cfg(Screening::Window, 5)).unwrap();
        assert!(fit.model.n_levels() >= 1);
        assert_eq!(fit.model.levels.last().unwrap().validation_accuracy, 1.0);
        let preds = fit.model.predict_batch(&val).unwrap();
        assert!(preds.iter().zip(val.labels()).all(|(p, &l)| p.distribution.predicted() == l));
    }

    #[test]
    fn conservation_and_monotone_survivors() {
        let train = blobs(120, 0.8, 3);
        let val = blobs(60, 0.8, 4);
        for screening in [Screening::Window, Screening::Binning { bins: 10 }] {
            let fit = fit(&train, &val, &small_cfg(screening, 4)).unwrap();
            let levels = &fit.model.levels;
            assert_eq!(levels[0].n_entering, 120);
            let retired: usize = levels.iter().map(|l| l.n_retired).sum();
            assert_eq!(retired, 120);
            for w in levels.windows(2) {
                assert_eq!(w[1].n_entering, w[0].n_entering - w[0].n_high);
                assert!(w[1].n_entering <= w[0].n_entering);
                assert!(w[1].validation_accuracy > w[0].validation_accuracy);
            }
            for (t, l) in levels.iter().enumerate() {
                assert_eq!(fit.train_exit_level.iter().filter(|&&e| e == t).count(), l.n_retired);
            }
            let preds = fit.model.predict_batch(&val).unwrap();
            let counts = CascadeModel::exit_counts(&preds, levels.len());
            assert_eq!(counts.iter().sum::<usize>(), 60);
        }
    }

    #[test]
    fn no_screening_keeps_everyone() {
        let train = blobs(60, 0.9, 5);
        let val = blobs(30, 0.9, 6);
        let fit = fit(&train, &val, &small_cfg(Screening::None, 3)).unwrap();
        assert!(fit.model.levels.iter().all(|l| l.n_entering == 60 && l.n_high == 0));
    }

    #[test]
    fn single_level_cap() {
        let train = blobs(60, 0.9, 7);
        let val = blobs(30, 0.9, 8);
        let fit = fit(&train, &val, &small_cfg(Screening::Window, 1)).unwrap();
        assert_eq!(fit.model.n_levels(), 1);
        let x = val.row(0);
        let p = fit.model.predict_traced(x).unwrap();
        assert_eq!(p.levels_evaluated, 1);
        let level = &fit.model.levels[0];
        let mut expect = vec![0.0; 2];
        for f in &level.forests {
            let d = f.predict_distribution(x).unwrap();
            expect[0] += d[0] / 2.0;
            expect[1] += d[1] / 2.0;
        }
        assert_eq!(p.distribution.into_inner(), expect);
    }

    #[test]
    fn confident_instances_exit_early() {
        let train = blobs(120, 0.8, 9);
        let val = blobs(60, 0.8, 10);
        let fit = fit(&train, &val, &small_cfg(Screening::Window, 4)).unwrap();
        if fit.model.n_levels() < 2 {
            return;
        }
        let preds = fit.model.predict_batch(&val).unwrap();
        for (i, p) in preds.iter().enumerate() {
            assert_eq!(p.levels_evaluated, p.exit_level + 1);
            assert_eq!(*p, fit.model.predict_traced(val.row(i)).unwrap());
            if p.exit_level == 0 {
                assert!(fit.model.levels[0].threshold.is_high(p.distribution.confidence()));
            }
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let train = blobs(60, 0.7, 11);
        let val = blobs(30, 0.7, 12);
        let cfg = small_cfg(Screening::Window, 3);
        let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| fit(&train, &val, &cfg));
        let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| fit(&train, &val, &cfg));
        assert_eq!(a.unwrap(), b.unwrap());
    }

    #[test]
    fn input_errors() {
        let train = blobs(20, 0.0, 1);
        let narrow = Dataset::with_classes(vec![0.0; 6], 3, vec![0, 1], 2).unwrap();
        assert!(matches!(fit(&train, &narrow, &small_cfg(Screening::Window, 2)), Err(Error::DimensionMismatch { .. })));
        let mut bad = small_cfg(Screening::Window, 0);
        assert!(fit(&train, &train, &bad).is_err());
        bad.max_levels = 2;
        bad.cv_folds = 1;
        assert!(matches!(fit(&train, &train, &bad), Err(Error::FoldCountTooSmall(1))));
        let f = fit(&train, &train, &small_cfg(Screening::Window, 1)).unwrap();
        assert!(matches!(f.model.predict(&[0.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn image_input_goes_through_scanning() {
        let mut rng = rng_from_seed(4);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let c = i % 2;
            for p in 0..36 {
                let on = if c == 0 { (p / 6) % 2 == 0 } else { (p % 6) % 2 == 0 };
                features.push(f64::from(u8::from(on)) + rng.random_range(0.0..0.2));
            }
            labels.push(c);
        }
        let d = Dataset::with_classes(features, 36, labels, 2).unwrap().with_image_shape(6, 6).unwrap();
        let cfg = CascadeConfig {
            scan: Some(ScanConfig {
                grains: vec![GrainConfig::new(2, 1, 4), GrainConfig::new(3, 1, 4)],
                hash_screen: true,
                patch_subsample: 1.0,
            }),
            ..small_cfg(Screening::Window, 2)
        };
        let fit = fit(&d, &d, &cfg).unwrap();
        let scan = fit.model.scan.as_ref().unwrap();
        assert_eq!(fit.model.base_width, scan.output_width());
        assert_eq!(fit.model.levels[0].input_width, scan.output_width());
        let p = fit.model.predict(d.row(0)).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
