//! Accuracy and multi-model comparison statistics.
//!
//! * [`paired_t`]: `|sqrt(k) * mean / sd|` over per-fold accuracy differences.
//! * [`friedman`]: Iman-Davenport form of the Friedman statistic over mean ranks.
//! * [`nemenyi_cd`]: critical difference for mean ranks.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-tailed Student t critical value, alpha = 0.05, 4 degrees of freedom.
pub const T_CRIT_0_05_DF4: f64 = 2.13;
/// Studentized range critical value for Nemenyi, alpha = 0.1, 7 models.
pub const Q_0_1_K7: f64 = 2.693;

pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch { left: predictions.len(), right: labels.len() });
    }
    if labels.is_empty() {
        return Err(Error::EmptyVector);
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Per-fold differences between two paired models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    diffs: Vec<f64>,
}

impl PairedSample {
    pub fn new(diffs: Vec<f64>) -> Result<Self> {
        if diffs.len() < 2 {
            return Err(Error::TooFewDiffs(diffs.len()));
        }
        Ok(Self { diffs })
    }

    pub fn from_pairs(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
        }
        Self::new(a.iter().zip(b).map(|(x, y)| x - y).collect())
    }

    pub fn diffs(&self) -> &[f64] {
        &self.diffs
    }

    pub fn mean(&self) -> f64 {
        self.diffs.iter().sum::<f64>() / self.diffs.len() as f64
    }

    /// Sample standard deviation (k - 1 denominator).
    pub fn std_dev(&self) -> f64 {
        let mu = self.mean();
        let ss: f64 = self.diffs.iter().map(|d| (d - mu) * (d - mu)).sum();
        libm::sqrt(ss / (self.diffs.len() - 1) as f64)
    }
}

pub fn paired_t(s: &PairedSample) -> Result<f64> {
    let first = s.diffs[0];
    if s.diffs.iter().all(|&d| d == first) {
        return Err(Error::ZeroVariance);
    }
    let k = s.diffs.len() as f64;
    Ok(libm::fabs(libm::sqrt(k) * s.mean() / s.std_dev()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    mean_ranks: Vec<f64>,
    n_datasets: usize,
}

impl RankTable {
    pub fn new(mean_ranks: Vec<f64>, n_datasets: usize) -> Result<Self> {
        let k = mean_ranks.len() as f64;
        if mean_ranks.len() < 2 {
            return Err(Error::DegenerateTable("need at least two models"));
        }
        if n_datasets < 2 {
            return Err(Error::DegenerateTable("need at least two datasets"));
        }
        if mean_ranks.iter().any(|r| !(1.0..=k).contains(r)) {
            return Err(Error::DegenerateTable("mean rank outside [1, k]"));
        }
        Ok(Self { mean_ranks, n_datasets })
    }

    /// Restores mean ranks published with limited precision. Every per-dataset
    /// rank is a multiple of one half, so exact mean ranks lie on a grid of
    /// spacing `1 / (2 n_datasets)`; each value is snapped to the nearest
    /// grid point. Fails when a value sits farther than `tolerance` from the
    /// grid or the snapped ranks do not sum to `k (k + 1) / 2`.
    pub fn from_rounded(rounded: &[f64], n_datasets: usize, tolerance: f64) -> Result<Self> {
        let step = 2.0 * n_datasets as f64;
        let exact: Vec<f64> = rounded.iter().map(|r| libm::round(r * step) / step).collect();
        if rounded.iter().zip(&exact).any(|(r, e)| (r - e).abs() > tolerance) {
            return Err(Error::DegenerateTable("rank is not a rounded mean of half-integer ranks"));
        }
        let k = rounded.len() as f64;
        if (exact.iter().sum::<f64>() - k * (k + 1.0) / 2.0).abs() > 1e-9 {
            return Err(Error::DegenerateTable("restored ranks do not sum to k(k+1)/2"));
        }
        Self::new(exact, n_datasets)
    }

    /// Ranks each row (rank 1 = highest accuracy, ties share the average
    /// rank) and averages per model. `rows[d][j]` is model `j` on dataset `d`.
    pub fn from_accuracies(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::DegenerateTable("ragged accuracy table"));
        }
        let mut sums = vec![0.0; k];
        for row in rows {
            for (s, r) in sums.iter_mut().zip(average_ranks(row)) {
                *s += r;
            }
        }
        let n = rows.len() as f64;
        Self::new(sums.into_iter().map(|s| s / n).collect(), rows.len())
    }

    pub fn mean_ranks(&self) -> &[f64] {
        &self.mean_ranks
    }

    pub fn n_datasets(&self) -> usize {
        self.n_datasets
    }

    pub fn n_models(&self) -> usize {
        self.mean_ranks.len()
    }
}

/// Descending-order ranks with ties averaged.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Chi-square form of the Friedman statistic.
pub fn friedman_chi2(rt: &RankTable) -> f64 {
    let n = rt.n_datasets as f64;
    let k = rt.mean_ranks.len() as f64;
    let sum_sq: f64 = rt.mean_ranks.iter().map(|r| r * r).sum();
    12.0 * n * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0) / (k * (k + 1.0))
}

pub fn friedman(rt: &RankTable) -> Result<f64> {
    let n = rt.n_datasets as f64;
    let k = rt.mean_ranks.len() as f64;
    let tau = friedman_chi2(rt);
    let denom = n * (k - 1.0) - tau;
    if denom <= 0.0 {
        return Err(Error::DegenerateTable("ranks perfectly consistent across datasets"));
    }
    Ok((n - 1.0) * tau / denom)
}

pub fn nemenyi_cd(k: usize, n: usize, q_alpha: f64) -> f64 {
    let k = k as f64;
    q_alpha * libm::sqrt(k * (k + 1.0) / (6.0 * n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 1, 1, 1, 1, 1, 1, 0], &[1; 8]).unwrap(), 0.875);
        assert!(matches!(accuracy(&[1], &[1, 2]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn paired_t_cases() {
        let s = PairedSample::new(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.mean(), 3.0);
        assert!((s.std_dev() - 2.5f64.sqrt()).abs() < 1e-12);
        assert!((paired_t(&s).unwrap() - 4.242640687119285).abs() < 1e-12);
        assert_eq!(paired_t(&PairedSample::new(vec![-1.0, 1.0]).unwrap()).unwrap(), 0.0);
        assert_eq!(paired_t(&PairedSample::new(vec![2.0; 3]).unwrap()), Err(Error::ZeroVariance));
        assert!(matches!(PairedSample::new(vec![1.0]), Err(Error::TooFewDiffs(1))));
    }

    #[test]
    fn friedman_on_rounded_and_exact_ranks() {
        let rounded = RankTable::new(vec![5.89, 5.33, 3.0, 5.11, 1.61, 5.44, 1.61], 9).unwrap();
        assert!((friedman(&rounded).unwrap() - 23.958454).abs() < 1e-5);
        let ninths = [53.0, 48.0, 27.0, 46.0, 14.5, 49.0, 14.5].map(|x| x / 9.0);
        let exact = RankTable::new(ninths.to_vec(), 9).unwrap();
        assert!((friedman(&exact).unwrap() - 24.371097).abs() < 1e-5);
        let restored = RankTable::from_rounded(&[5.89, 5.33, 3.0, 5.11, 1.61, 5.44, 1.61], 9, 0.005).unwrap();
        assert!((friedman(&restored).unwrap() - 24.371097).abs() < 1e-5);
    }

    #[test]
    fn restoring_rejects_off_grid_ranks() {
        // 1/18 grid: 5.86 is 0.0156 from 5.8444 and 0.0289 from 5.8889.
        assert!(RankTable::from_rounded(&[5.86, 5.33, 3.0, 5.11, 1.61, 5.44, 1.61], 9, 0.005).is_err());
        // on the grid but summing to 28.0556
        assert!(RankTable::from_rounded(&[5.94, 5.33, 3.0, 5.11, 1.61, 5.44, 1.61], 9, 0.005).is_err());
    }

    #[test]
    fn friedman_hand_cases() {
        let flat = RankTable::new(vec![4.0; 7], 9).unwrap();
        assert_eq!(friedman(&flat).unwrap(), 0.0);
        // k = 2, N = 10: tau = 120 * (1.44 + 3.24 - 4.5) / 6 = 3.6; F = 9 * 3.6 / 6.4.
        let two = RankTable::new(vec![1.2, 1.8], 10).unwrap();
        assert!((friedman_chi2(&two) - 3.6).abs() < 1e-12);
        assert!((friedman(&two).unwrap() - 5.0625).abs() < 1e-12);
        let perfect = RankTable::new(vec![1.0, 2.0], 10).unwrap();
        assert!(matches!(friedman(&perfect), Err(Error::DegenerateTable(_))));
        assert!(RankTable::new(vec![0.5, 2.0], 10).is_err());
        assert!(RankTable::new(vec![1.0, 2.0], 1).is_err());
    }

    #[test]
    fn nemenyi_cases() {
        assert!((nemenyi_cd(7, 9, Q_0_1_K7) - 2.742).abs() < 1e-3);
        assert_eq!(nemenyi_cd(7, 9, 0.0), 0.0);
        assert!((nemenyi_cd(2, 6, 1.0) - 0.408248290463863).abs() < 1e-12);
    }

    #[test]
    fn rank_ties_are_averaged() {
        assert_eq!(average_ranks(&[0.9, 0.8, 0.9, 0.7]), vec![1.5, 3.0, 1.5, 4.0]);
        let rt = RankTable::from_accuracies(&[vec![0.9, 0.8], vec![0.7, 0.8]]).unwrap();
        assert_eq!(rt.mean_ranks(), &[1.5, 1.5]);
    }

    proptest! {
        #[test]
        fn friedman_permutation_invariant(
            accs in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 5), 3..10),
            shift in 0usize..5,
        ) {
            let rt = RankTable::from_accuracies(&accs).unwrap();
            let rotated: Vec<Vec<f64>> = accs.iter().map(|r| {
                let mut r = r.clone();
                r.rotate_left(shift);
                r
            }).collect();
            let rt2 = RankTable::from_accuracies(&rotated).unwrap();
            match (friedman(&rt), friedman(&rt2)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs())),
                (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
            }
            let sum: f64 = rt.mean_ranks().iter().sum();
            prop_assert!((sum - 15.0).abs() < 1e-9);
        }

        #[test]
        fn two_decimal_ranks_restore_exactly(
            accs in proptest::collection::vec(proptest::collection::vec(0u8..4, 4), 2..30),
        ) {
            let rows: Vec<Vec<f64>> = accs.iter().map(|r| r.iter().map(|&a| f64::from(a)).collect()).collect();
            let rt = RankTable::from_accuracies(&rows).unwrap();
            let rounded: Vec<f64> = rt.mean_ranks().iter().map(|r| libm::round(r * 100.0) / 100.0).collect();
            let back = RankTable::from_rounded(&rounded, rows.len(), 0.005 + 1e-9).unwrap();
            for (a, b) in back.mean_ranks().iter().zip(rt.mean_ranks()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn nemenyi_monotone(k in 2usize..20, n in 1usize..50, q in 0.1f64..5.0) {
            prop_assert!(nemenyi_cd(k, n + 1, q) < nemenyi_cd(k, n, q));
            prop_assert!(nemenyi_cd(k + 1, n, q) > nemenyi_cd(k, n, q));
            prop_assert!(nemenyi_cd(k, n, q * 1.1) > nemenyi_cd(k, n, q));
        }

        #[test]
        fn paired_t_sign_invariant(diffs in proptest::collection::vec(-1.0f64..1.0, 2..10)) {
            let pos = PairedSample::new(diffs.clone()).unwrap();
            let neg = PairedSample::new(diffs.iter().map(|d| -d).collect()).unwrap();
            match (paired_t(&pos), paired_t(&neg)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a)),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }
}
