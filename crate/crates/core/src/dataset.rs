//! Validated in-memory datasets and seeded train/test splitting.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, stream};

/// Dense row-major feature matrix with integer class labels.
///
/// Invariants are checked on construction and the value is immutable
/// afterwards: every feature is finite, every label is below `n_classes`, and
/// an image shape (if any) covers exactly `n_features` pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    n_classes: usize,
    image_shape: Option<(usize, usize)>,
}

impl Dataset {
    /// Builds a dataset, inferring `K = max(label) + 1`.
    pub fn new(features: Vec<f64>, n_features: usize, labels: Vec<usize>) -> Result<Self> {
        let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        Self::with_classes(features, n_features, labels, n_classes)
    }

    /// Builds a dataset with an explicit class count, which may exceed the
    /// largest observed label (e.g. a test split missing a rare class).
    pub fn with_classes(features: Vec<f64>, n_features: usize, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if n_features == 0 || !features.len().is_multiple_of(n_features) {
            return Err(Error::RaggedFeatures { len: features.len(), n_features });
        }
        let n = features.len() / n_features;
        if n != labels.len() {
            return Err(Error::LengthMismatch { left: n, right: labels.len() });
        }
        for (index, &label) in labels.iter().enumerate() {
            if label >= n_classes {
                return Err(Error::LabelOutOfRange { index, label, n_classes });
            }
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { index: pos / n_features, feature: pos % n_features });
        }
        Ok(Self { features, n_features, labels, n_classes, image_shape: None })
    }

    pub fn with_image_shape(mut self, height: usize, width: usize) -> Result<Self> {
        if height * width != self.n_features {
            return Err(Error::ShapeMismatch { height, width, n_features: self.n_features });
        }
        self.image_shape = Some((height, width));
        Ok(self)
    }

    pub fn n_instances(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.image_shape
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Copies the given rows (in the given order) into a new dataset with the
    /// same class count and image shape.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            n_features: self.n_features,
            labels,
            n_classes: self.n_classes,
            image_shape: self.image_shape,
        }
    }

    /// Replaces the feature matrix, keeping labels and class count. The image
    /// shape is dropped.
    pub fn with_features(&self, features: Vec<f64>, n_features: usize) -> Result<Dataset> {
        Dataset::with_classes(features, n_features, self.labels.clone(), self.n_classes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64, stratified: bool) -> Self {
        Self { train_fraction, seed, stratified }
    }
}

fn train_count(n: usize, fraction: f64) -> usize {
    let k = libm::round(n as f64 * fraction) as usize;
    if n >= 2 {
        k.clamp(1, n - 1)
    } else {
        k.min(n)
    }
}

/// Returns `(train, test)` index sets, each sorted ascending. Disjoint and
/// exhaustive; a pure function of `(d, s)`.
pub fn split_indices(d: &Dataset, s: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
        return Err(Error::InvalidFraction(s.train_fraction));
    }
    let mut rng = rng_from_seed(derive_seed(s.seed, stream::SPLIT, 0));
    let mut train = Vec::new();
    let mut test = Vec::new();
    if s.stratified {
        let mut by_class: Vec<Vec<usize>> = alloc::vec![Vec::new(); d.n_classes()];
        for (i, &l) in d.labels().iter().enumerate() {
            by_class[l].push(i);
        }
        for (class, mut members) in by_class.into_iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            if members.len() == 1 {
                return Err(Error::ClassWithSingleInstance(class));
            }
            members.shuffle(&mut rng);
            let k = train_count(members.len(), s.train_fraction);
            train.extend_from_slice(&members[..k]);
            test.extend_from_slice(&members[k..]);
        }
    } else {
        let mut all: Vec<usize> = (0..d.n_instances()).collect();
        all.shuffle(&mut rng);
        let k = train_count(all.len(), s.train_fraction);
        train.extend_from_slice(&all[..k]);
        test.extend_from_slice(&all[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(d: &Dataset, s: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(d, s)?;
    Ok((d.subset(&train), d.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn balanced(n_per_class: usize, classes: usize) -> Dataset {
        let labels: Vec<usize> = (0..classes).flat_map(|c| vec![c; n_per_class]).collect();
        let features = (0..labels.len()).map(|i| i as f64).collect();
        Dataset::new(features, 1, labels).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        assert!(matches!(
            Dataset::new(vec![0.0, f64::NAN], 1, vec![0, 1]),
            Err(Error::NonFiniteFeature { index: 1, feature: 0 })
        ));
        assert!(matches!(Dataset::new(vec![0.0, 1.0, 2.0], 2, vec![0]), Err(Error::RaggedFeatures { .. })));
        let d = Dataset::new(vec![0.0; 6], 6, vec![0]).unwrap();
        assert!(d.clone().with_image_shape(2, 3).is_ok());
        assert!(matches!(d.with_image_shape(2, 2), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(
            Dataset::with_classes(vec![0.0], 1, vec![3], 2),
            Err(Error::LabelOutOfRange { label: 3, .. })
        ));
    }

    #[test]
    fn stratified_split_of_ten_is_four_and_one_per_class() {
        let d = balanced(5, 2);
        let (tr, te) = split(&d, &SplitSpec::new(0.8, 3, true)).unwrap();
        assert_eq!(tr.n_instances(), 8);
        assert_eq!(te.n_instances(), 2);
        assert_eq!(tr.class_counts(), vec![4, 4]);
        assert_eq!(te.class_counts(), vec![1, 1]);
    }

    #[test]
    fn mnist_sized_layout_matches_published_counts() {
        // 70,000 instances over 10 classes of 7,000 each.
        let labels: Vec<usize> = (0..70_000).map(|i| i % 10).collect();
        let d = Dataset::new(vec![0.0; 70_000], 1, labels).unwrap();
        let (tr, te) = split_indices(&d, &SplitSpec::new(0.8, 1, true)).unwrap();
        assert_eq!((tr.len(), te.len()), (56_000, 14_000));
    }

    #[test]
    fn same_seed_same_partition() {
        let d = balanced(17, 3);
        let s = SplitSpec::new(0.7, 42, false);
        assert_eq!(split_indices(&d, &s).unwrap(), split_indices(&d, &s).unwrap());
        let other = split_indices(&d, &SplitSpec::new(0.7, 43, false)).unwrap();
        assert_ne!(split_indices(&d, &s).unwrap(), other);
    }

    #[test]
    fn singleton_class_cannot_be_stratified() {
        let d = Dataset::new(vec![0.0, 1.0, 2.0], 1, vec![0, 0, 1]).unwrap();
        assert_eq!(split(&d, &SplitSpec::new(0.5, 0, true)).unwrap_err(), Error::ClassWithSingleInstance(1));
        assert!(split(&d, &SplitSpec::new(0.5, 0, false)).is_ok());
        assert!(matches!(split(&d, &SplitSpec::new(1.0, 0, false)), Err(Error::InvalidFraction(_))));
    }
}
