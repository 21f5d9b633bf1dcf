//! Decision trees and the two forest flavours used throughout the cascade,
//! plus k-fold out-of-fold class vectors.
//!
//! * [`ForestKind::Random`]: bootstrap sample per tree, `ceil(sqrt(F))`
//!   candidate features per split, best Gini split.
//! * [`ForestKind::CompletelyRandom`]: full sample, one random feature per
//!   split, threshold drawn uniformly inside a random gap between adjacent
//!   distinct observed values. Labels are only consulted for the purity stop.
//!
//! Trees grow until a node is pure or holds fewer than two samples. Leaves
//! store raw class frequencies.

use alloc::vec::Vec;
use core::ops::Deref;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::rng::{derive_seed, rng_from_seed, stream};

mod tree;

pub use tree::{DecisionTree, TreeNode};

/// Read access to labelled training samples. Implemented by [`Dataset`] and
/// by lazy views such as scanning patches, so trees never need a copy.
pub trait Samples: Sync {
    fn n_samples(&self) -> usize;
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;
    fn value(&self, sample: usize, feature: usize) -> f64;
    fn label(&self, sample: usize) -> usize;
}

impl Samples for Dataset {
    fn n_samples(&self) -> usize {
        self.n_instances()
    }
    fn n_features(&self) -> usize {
        Dataset::n_features(self)
    }
    fn n_classes(&self) -> usize {
        Dataset::n_classes(self)
    }
    #[inline]
    fn value(&self, sample: usize, feature: usize) -> f64 {
        self.features()[sample * Dataset::n_features(self) + feature]
    }
    #[inline]
    fn label(&self, sample: usize) -> usize {
        Dataset::label(self, sample)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestKind {
    Random,
    CompletelyRandom,
}

/// Per-class probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution(Vec<f64>);

impl ClassDistribution {
    pub fn new(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Largest probability.
    pub fn confidence(&self) -> f64 {
        confidence(&self.0)
    }

    /// Arg-max class, lowest index on ties.
    pub fn predicted(&self) -> usize {
        argmax(&self.0)
    }
}

impl Deref for ClassDistribution {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn confidence(p: &[f64]) -> f64 {
    p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    kind: ForestKind,
    trees: Vec<DecisionTree>,
    n_classes: usize,
    n_features: usize,
    seed: u64,
}

pub fn default_max_features(n_features: usize) -> usize {
    let r = libm::ceil(libm::sqrt(n_features as f64)) as usize;
    r.clamp(1, n_features.max(1))
}

impl ForestModel {
    /// Trains `n_trees` trees on the samples listed in `indices`.
    pub fn fit<S: Samples + ?Sized>(
        samples: &S,
        indices: &[usize],
        kind: ForestKind,
        n_trees: usize,
        seed: u64,
    ) -> Result<ForestModel> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if n_trees == 0 {
            return Err(Error::NoTrees);
        }
        let max_features = default_max_features(samples.n_features());
        let trees = map_indexed(n_trees, |t| {
            let mut rng = rng_from_seed(derive_seed(seed, stream::TREE, t as u64));
            let sample = match kind {
                ForestKind::Random => (0..indices.len()).map(|_| indices[rng.random_range(0..indices.len())]).collect(),
                ForestKind::CompletelyRandom => indices.to_vec(),
            };
            DecisionTree::grow(samples, sample, kind, max_features, &mut rng)
        });
        Ok(ForestModel { kind, trees, n_classes: samples.n_classes(), n_features: samples.n_features(), seed })
    }

    /// Assembles a forest from already-built trees.
    pub fn from_trees(kind: ForestKind, trees: Vec<DecisionTree>, n_features: usize, seed: u64) -> Result<ForestModel> {
        let n_classes = trees.first().ok_or(Error::NoTrees)?.n_classes();
        if let Some(t) = trees.iter().find(|t| t.n_classes() != n_classes) {
            return Err(Error::ClassCountMismatch { expected: n_classes, got: t.n_classes() });
        }
        Ok(ForestModel { kind, trees, n_classes, n_features, seed })
    }

    pub fn kind(&self) -> ForestKind {
        self.kind
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn predict_distribution(&self, x: &[f64]) -> Result<ClassDistribution> {
        let mut out = alloc::vec![0.0; self.n_classes];
        self.predict_into(x, &mut out)?;
        Ok(ClassDistribution(out))
    }

    /// Writes the mean leaf distribution for `x` into `out` (length `K`).
    pub fn predict_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for tree in &self.trees {
            for (o, p) in out.iter_mut().zip(tree.leaf_distribution(x)) {
                *o += p;
            }
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= n);
        Ok(())
    }

    /// Batch form of [`predict_into`](Self::predict_into): `rows` is a
    /// row-major `n x n_features` matrix, `out` receives `n x K`. Walks one
    /// tree over every row before moving on, which keeps the tree in cache.
    pub fn predict_rows_into(&self, rows: &[f64], out: &mut [f64]) -> Result<()> {
        let f = self.n_features;
        let k = self.n_classes;
        if f == 0 || !rows.len().is_multiple_of(f) {
            return Err(Error::DimensionMismatch { expected: f, got: rows.len() });
        }
        let n = rows.len() / f;
        if out.len() != n * k {
            return Err(Error::DimensionMismatch { expected: n * k, got: out.len() });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for tree in &self.trees {
            for (x, o) in rows.chunks_exact(f).zip(out.chunks_exact_mut(k)) {
                for (a, p) in o.iter_mut().zip(tree.leaf_distribution(x)) {
                    *a += p;
                }
            }
        }
        let t = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= t);
        Ok(())
    }
}

/// Trains a forest on every instance of `d`.
pub fn train_forest(d: &Dataset, kind: ForestKind, n_trees: usize, seed: u64) -> Result<ForestModel> {
    let all: Vec<usize> = (0..d.n_instances()).collect();
    ForestModel::fit(d, &all, kind, n_trees, seed)
}

/// Assignment of instances to `k` folds. Fold sizes differ by at most one and
/// classes are spread round-robin so every fold sees every class where
/// possible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    fold_of: Vec<usize>,
}

impl FoldPlan {
    pub fn stratified(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
        if k < 2 {
            return Err(Error::FoldCountTooSmall(k));
        }
        if labels.len() < k {
            return Err(Error::TooFewForFolds { instances: labels.len(), folds: k });
        }
        let mut rng = rng_from_seed(derive_seed(seed, stream::FOLD_PLAN, 0));
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut rng);
        // Stable sort keeps the shuffled order inside each class.
        order.sort_by_key(|&i| labels[i]);
        let mut fold_of = alloc::vec![0; labels.len()];
        for (pos, &i) in order.iter().enumerate() {
            fold_of[i] = pos % k;
        }
        Ok(FoldPlan { k, fold_of })
    }

    /// Builds a plan from explicit assignments.
    pub fn from_assignments(k: usize, fold_of: Vec<usize>) -> Result<FoldPlan> {
        if k < 2 {
            return Err(Error::FoldCountTooSmall(k));
        }
        if fold_of.iter().any(|&f| f >= k) {
            return Err(Error::InvalidConfig("fold id out of range"));
        }
        Ok(FoldPlan { k, fold_of })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    pub fn len(&self) -> usize {
        self.fold_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_of.is_empty()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Out-of-fold class vectors: row `i` (length `K`) is predicted by a forest
/// trained on every fold except `plan.fold_of(i)`. Returns an `n x K`
/// row-major matrix.
pub fn oof_class_vectors<S: Samples + ?Sized>(
    samples: &S,
    kind: ForestKind,
    n_trees: usize,
    plan: &FoldPlan,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = samples.n_samples();
    if plan.k() < 2 {
        return Err(Error::FoldCountTooSmall(plan.k()));
    }
    if plan.len() != n {
        return Err(Error::LengthMismatch { left: plan.len(), right: n });
    }
    let k_classes = samples.n_classes();
    let folds = map_indexed(plan.k(), |f| -> Result<Vec<(usize, Vec<f64>)>> {
        let train: Vec<usize> = (0..n).filter(|&i| plan.fold_of(i) != f).collect();
        let held: Vec<usize> = (0..n).filter(|&i| plan.fold_of(i) == f).collect();
        if held.is_empty() {
            return Ok(Vec::new());
        }
        let forest = ForestModel::fit(samples, &train, kind, n_trees, derive_seed(seed, stream::FOLD, f as u64))?;
        let mut x = alloc::vec![0.0; samples.n_features()];
        let mut rows = Vec::with_capacity(held.len());
        for i in held {
            for (j, v) in x.iter_mut().enumerate() {
                *v = samples.value(i, j);
            }
            let mut out = alloc::vec![0.0; k_classes];
            forest.predict_into(&x, &mut out)?;
            rows.push((i, out));
        }
        Ok(rows)
    });
    let mut matrix = alloc::vec![0.0; n * k_classes];
    for fold in folds {
        for (i, row) in fold? {
            matrix[i * k_classes..(i + 1) * k_classes].copy_from_slice(&row);
        }
    }
    Ok(matrix)
}
