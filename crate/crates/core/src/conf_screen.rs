//! Confidence-based instance screening for a cascade level.
//!
//! Instances are ranked by confidence (highest first). A threshold `WT` is
//! then chosen and every instance whose confidence is strictly above it
//! retires at the current level; the rest move on.
//!
//! Two threshold searches are provided:
//!
//! * [`window_threshold`]: a window of `floor(m/2)` ranked instances slides
//!   down one rank at a time while its accuracy stays at or above the target
//!   `TA`. When it drops below, the window halves in place. Once a window of
//!   size two or less fails, the confidence of its first instance is `WT`.
//! * [`binning_threshold`]: the ranked list is cut into `k` equal bins and the
//!   threshold sits at the end of the last bin before the first bin whose
//!   accuracy falls below `TA`.
//!
//! Ranks in the public API are 1-based, matching how windows are described.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{argmax, confidence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRecord {
    pub instance_id: usize,
    pub distribution: Vec<f64>,
    pub confidence: f64,
    pub predicted: usize,
    pub label: usize,
}

impl ConfidenceRecord {
    pub fn new(instance_id: usize, distribution: Vec<f64>, label: usize) -> Self {
        let confidence = confidence(&distribution);
        let predicted = argmax(&distribution);
        Self { instance_id, distribution, confidence, predicted, label }
    }

    /// A record carrying only a confidence and correctness, for tests and
    /// diagnostics where the full distribution does not matter.
    pub fn bare(instance_id: usize, confidence: f64, correct: bool) -> Self {
        Self { instance_id, distribution: Vec::new(), confidence, predicted: 0, label: usize::from(!correct) }
    }

    pub fn is_correct(&self) -> bool {
        self.predicted == self.label
    }
}

/// Sorts by descending confidence, ties by ascending instance id.
pub fn rank(mut records: Vec<ConfidenceRecord>) -> Vec<ConfidenceRecord> {
    records.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then(a.instance_id.cmp(&b.instance_id)));
    records
}

/// Confidence threshold `WT`. Instances with confidence strictly greater
/// than the value are high-confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Confidence(f64),
    /// Every instance is high-confidence.
    PassAll,
    /// No instance is high-confidence.
    PassNone,
}

impl Threshold {
    pub fn is_high(&self, confidence: f64) -> bool {
        match *self {
            Threshold::Confidence(wt) => confidence > wt,
            Threshold::PassAll => true,
            Threshold::PassNone => false,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Threshold::Confidence(wt) => Some(wt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenPartition {
    pub threshold: Threshold,
    pub high: Vec<usize>,
    pub low: Vec<usize>,
}

/// Splits ranked records by `threshold`; ids keep ranked order.
pub fn partition(ranked: &[ConfidenceRecord], threshold: Threshold) -> ScreenPartition {
    let (mut high, mut low) = (Vec::new(), Vec::new());
    for r in ranked {
        if threshold.is_high(r.confidence) {
            high.push(r.instance_id);
        } else {
            low.push(r.instance_id);
        }
    }
    ScreenPartition { threshold, high, low }
}

/// Fraction of correct predictions among ranks `u..=l` (1-based).
pub fn window_accuracy(ranked: &[ConfidenceRecord], u: usize, l: usize) -> Result<f64> {
    let m = ranked.len();
    if u == 0 || u > l || l > m {
        return Err(Error::InvalidBounds { u, l, m });
    }
    let correct = ranked[u - 1..l].iter().filter(|r| r.is_correct()).count();
    Ok(correct as f64 / (l - u + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMove {
    Slide,
    Shrink,
    /// Window of size <= 2 failed; `WT` is its first instance.
    Stop,
    /// Window reached the last rank without failing.
    End,
}

/// One evaluated window position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStep {
    pub c: usize,
    pub u: usize,
    pub l: usize,
    pub accuracy: f64,
    pub action: WindowMove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowScreening {
    pub partition: ScreenPartition,
    pub trace: Vec<WindowStep>,
    /// 1-based rank whose confidence became `WT`, if any.
    pub threshold_rank: Option<usize>,
}

fn check_ta(ta: f64) -> Result<()> {
    if ta > 0.0 && ta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidTargetAccuracy(ta))
    }
}

pub fn window_threshold(ranked: &[ConfidenceRecord], ta: f64) -> Result<WindowScreening> {
    check_ta(ta)?;
    let m = ranked.len();
    if m < 2 {
        return Err(Error::TooFewInstances(m));
    }
    let mut c = m / 2;
    let (mut u, mut l) = (1, c);
    let mut trace = Vec::new();
    loop {
        let accuracy = window_accuracy(ranked, u, l)?;
        if accuracy >= ta {
            if l == m {
                trace.push(WindowStep { c, u, l, accuracy, action: WindowMove::End });
                return Ok(WindowScreening {
                    partition: partition(ranked, Threshold::PassAll),
                    trace,
                    threshold_rank: None,
                });
            }
            trace.push(WindowStep { c, u, l, accuracy, action: WindowMove::Slide });
            u += 1;
            l += 1;
        } else if c <= 2 {
            trace.push(WindowStep { c, u, l, accuracy, action: WindowMove::Stop });
            let wt = Threshold::Confidence(ranked[u - 1].confidence);
            return Ok(WindowScreening { partition: partition(ranked, wt), trace, threshold_rank: Some(u) });
        } else {
            trace.push(WindowStep { c, u, l, accuracy, action: WindowMove::Shrink });
            c /= 2;
            l = u + c - 1;
        }
    }
}

/// Binning outcome, with per-bin accuracies for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningScreening {
    pub partition: ScreenPartition,
    pub bin_accuracies: Vec<f64>,
    pub threshold_rank: Option<usize>,
}

/// Bins of `floor(m/k)` ranks each; the last bin absorbs the remainder.
pub fn binning_threshold(ranked: &[ConfidenceRecord], k: usize, ta: f64) -> Result<BinningScreening> {
    check_ta(ta)?;
    let m = ranked.len();
    if k == 0 || k > m {
        return Err(Error::BinCountExceedsInstances { bins: k, instances: m });
    }
    let size = m / k;
    let bounds = |t: usize| (t * size, if t + 1 == k { m } else { (t + 1) * size });
    let bin_accuracies: Vec<f64> = (0..k)
        .map(|t| {
            let (a, b) = bounds(t);
            ranked[a..b].iter().filter(|r| r.is_correct()).count() as f64 / (b - a) as f64
        })
        .collect();
    let (threshold, threshold_rank) = match bin_accuracies.iter().position(|&p| p < ta) {
        None => (Threshold::PassAll, None),
        Some(0) => (Threshold::PassNone, None),
        Some(t) => {
            // Last instance of bin t (1-based bins t = 1..), i.e. rank t*size.
            let rank = t * size;
            (Threshold::Confidence(ranked[rank - 1].confidence), Some(rank))
        }
    };
    Ok(BinningScreening { partition: partition(ranked, threshold), bin_accuracies, threshold_rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    /// Sixteen ranked instances; ranks 1, 2, 4, 5, 6, 7, 8 and 11 are correct.
    fn sixteen() -> Vec<ConfidenceRecord> {
        let correct = [1, 2, 4, 5, 6, 7, 8, 11];
        (1..=16).map(|r| ConfidenceRecord::bare(r - 1, 1.0 - r as f64 * 0.03, correct.contains(&r))).collect()
    }

    #[test]
    fn record_fields() {
        let r = ConfidenceRecord::new(0, vec![0.5, 0.3, 0.2], 0);
        assert_eq!(r.confidence, 0.5);
        assert_eq!(r.predicted, 0);
        let tie = ConfidenceRecord::new(0, vec![0.4, 0.4, 0.2], 1);
        assert_eq!(tie.predicted, 0);
        assert!(!tie.is_correct());
    }

    #[test]
    fn rank_orders_and_breaks_ties_by_id() {
        let recs = vec![
            ConfidenceRecord::bare(0, 0.3, true),
            ConfidenceRecord::bare(1, 0.9, true),
            ConfidenceRecord::bare(2, 0.6, true),
        ];
        let ids: Vec<usize> = rank(recs).iter().map(|r| r.instance_id).collect();
        assert_eq!(ids, vec![1, 2, 0]);
        let ties = vec![ConfidenceRecord::bare(2, 0.5, true), ConfidenceRecord::bare(0, 0.5, true)];
        let ids: Vec<usize> = rank(ties).iter().map(|r| r.instance_id).collect();
        assert_eq!(ids, vec![0, 2]);
    }

    #[test]
    fn window_accuracy_examples() {
        let r = sixteen();
        assert_eq!(window_accuracy(&r, 1, 8).unwrap(), 0.875);
        assert_eq!(window_accuracy(&r, 3, 10).unwrap(), 0.625);
        assert_eq!(window_accuracy(&r, 7, 8).unwrap(), 1.0);
        assert!(matches!(window_accuracy(&r, 0, 3), Err(Error::InvalidBounds { .. })));
        assert!(matches!(window_accuracy(&r, 5, 17), Err(Error::InvalidBounds { .. })));
    }

    #[test]
    fn window_threshold_on_sixteen() {
        let r = sixteen();
        let w = window_threshold(&r, 0.70).unwrap();
        assert_eq!(w.threshold_rank, Some(8));
        assert_eq!(w.partition.threshold, Threshold::Confidence(r[7].confidence));
        assert_eq!(w.partition.high, (0..7).collect::<Vec<_>>());
        let acc: Vec<f64> = w.trace.iter().map(|s| s.accuracy).collect();
        assert_eq!(acc, vec![0.875, 0.75, 0.625, 0.75, 1.0, 1.0, 0.75, 0.5, 1.0, 0.5]);
        let last = w.trace.last().unwrap();
        assert_eq!((last.c, last.u, last.l, last.action), (2, 8, 9, WindowMove::Stop));
    }

    #[test]
    fn all_correct_passes_everything() {
        let r: Vec<ConfidenceRecord> = (0..9).map(|i| ConfidenceRecord::bare(i, 0.9 - i as f64 * 0.01, true)).collect();
        let w = window_threshold(&r, 0.99).unwrap();
        assert_eq!(w.partition.threshold, Threshold::PassAll);
        assert_eq!(w.partition.high.len(), 9);
    }

    #[test]
    fn all_wrong_retires_nothing() {
        let r: Vec<ConfidenceRecord> =
            (0..10).map(|i| ConfidenceRecord::bare(i, 0.9 - i as f64 * 0.01, false)).collect();
        let w = window_threshold(&r, 0.5).unwrap();
        assert_eq!(w.threshold_rank, Some(1));
        let cs: Vec<usize> = w.trace.iter().map(|s| s.c).collect();
        assert_eq!(cs, vec![5, 2]);
        assert!(w.partition.high.is_empty());
        assert!(matches!(window_threshold(&r[..1], 0.5), Err(Error::TooFewInstances(1))));
    }

    #[test]
    fn binning_examples() {
        let r = sixteen();
        let b8 = binning_threshold(&r, 8, 0.70).unwrap();
        assert_eq!(b8.bin_accuracies[1], 0.5);
        assert_eq!(b8.threshold_rank, Some(2));
        let b4 = binning_threshold(&r, 4, 0.70).unwrap();
        assert_eq!(b4.bin_accuracies[2], 0.25);
        assert_eq!(b4.threshold_rank, Some(8));
        assert_eq!(b4.partition.threshold, Threshold::Confidence(r[7].confidence));

        let wrong_first: Vec<ConfidenceRecord> =
            (0..4).map(|i| ConfidenceRecord::bare(i, 0.9 - i as f64 * 0.1, i > 1)).collect();
        let b1 = binning_threshold(&wrong_first, 1, 0.7).unwrap();
        assert_eq!(b1.partition.threshold, Threshold::PassNone);
        assert!(b1.partition.high.is_empty());
        assert!(matches!(binning_threshold(&r, 17, 0.7), Err(Error::BinCountExceedsInstances { .. })));
    }

    #[test]
    fn binning_remainder_goes_to_last_bin() {
        let r: Vec<ConfidenceRecord> = (0..7).map(|i| ConfidenceRecord::bare(i, 1.0 - i as f64 * 0.1, i < 4)).collect();
        let b = binning_threshold(&r, 3, 0.7).unwrap();
        // Bins: ranks 1-2, 3-4, 5-7.
        assert_eq!(b.bin_accuracies, vec![1.0, 1.0, 0.0]);
        assert_eq!(b.threshold_rank, Some(4));
    }

    #[test]
    fn partition_strictness() {
        let r = sixteen();
        let max = r[0].confidence;
        assert!(partition(&r, Threshold::Confidence(max)).high.is_empty());
        assert_eq!(partition(&r, Threshold::Confidence(0.0)).high.len(), 16);
        let p = partition(&r, Threshold::Confidence(r[7].confidence));
        assert_eq!(p.high, (0..7).collect::<Vec<_>>());
        assert_eq!(p.low, (7..16).collect::<Vec<_>>());
    }

    /// Step-by-step simulator written from the prose description, with
    /// explicit stage bookkeeping instead of the production loop shape.
    fn simulate(correct: &[bool], ta: f64) -> Option<usize> {
        let m = correct.len();
        let acc = |u: usize, l: usize| {
            let hits = (u..=l).filter(|&i| correct[i - 1]).count();
            hits as f64 / (l - u + 1) as f64
        };
        let mut size = m / 2;
        let mut start = 1;
        'stages: loop {
            let mut s = start;
            while s + size - 1 <= m {
                if acc(s, s + size - 1) < ta {
                    if size <= 2 {
                        return Some(s);
                    }
                    start = s;
                    size /= 2;
                    continue 'stages;
                }
                s += 1;
            }
            return None;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn window_matches_simulator(
            correct in proptest::collection::vec(any::<bool>(), 2..=20),
            ta_pct in 1u32..=100,
        ) {
            let ta = f64::from(ta_pct) / 100.0;
            let ranked: Vec<ConfidenceRecord> = correct
                .iter()
                .enumerate()
                .map(|(i, &c)| ConfidenceRecord::bare(i, 1.0 - i as f64 / 64.0, c))
                .collect();
            let w = window_threshold(&ranked, ta).unwrap();
            let expected = simulate(&correct, ta);
            prop_assert_eq!(w.threshold_rank, expected);
            // High set is a ranked prefix.
            let n_high = w.partition.high.len();
            prop_assert_eq!(&w.partition.high, &(0..n_high).collect::<Vec<_>>());
            prop_assert!(w.trace.len() <= 2 * correct.len() + 8);
        }

        #[test]
        fn ranking_and_threshold_scale_invariant(
            confs in proptest::collection::vec(0.05f64..1.0, 2..=20),
            correct in proptest::collection::vec(any::<bool>(), 20),
            scale in 0.1f64..0.99,
        ) {
            let recs: Vec<ConfidenceRecord> = confs.iter().enumerate()
                .map(|(i, &c)| ConfidenceRecord::bare(i, c, correct[i])).collect();
            let scaled: Vec<ConfidenceRecord> = confs.iter().enumerate()
                .map(|(i, &c)| ConfidenceRecord::bare(i, c * scale, correct[i])).collect();
            let a = rank(recs);
            let b = rank(scaled);
            let ids_a: Vec<usize> = a.iter().map(|r| r.instance_id).collect();
            let ids_b: Vec<usize> = b.iter().map(|r| r.instance_id).collect();
            prop_assert_eq!(&ids_a, &ids_b);
            let wa = window_threshold(&a, 0.7).unwrap();
            let wb = window_threshold(&b, 0.7).unwrap();
            prop_assert_eq!(wa.threshold_rank, wb.threshold_rank);
        }

        #[test]
        fn binning_with_one_instance_per_bin_stops_before_first_error(
            correct in proptest::collection::vec(any::<bool>(), 1..=20),
        ) {
            let ranked: Vec<ConfidenceRecord> = correct.iter().enumerate()
                .map(|(i, &c)| ConfidenceRecord::bare(i, 1.0 - i as f64 / 64.0, c)).collect();
            let b = binning_threshold(&ranked, ranked.len(), 0.5).unwrap();
            match correct.iter().position(|&c| !c) {
                None => prop_assert_eq!(b.partition.threshold, Threshold::PassAll),
                Some(0) => prop_assert_eq!(b.partition.threshold, Threshold::PassNone),
                Some(first_wrong) => prop_assert_eq!(b.threshold_rank, Some(first_wrong)),
            }
        }
    }
}
