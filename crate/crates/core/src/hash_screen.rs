//! Average-hash screening of sliding-window locations.
//!
//! Every patch is binarised against its own mean. For one location `r`, the
//! fraction of instances with bit `j` set is folded onto `[0, 0.5]`
//! (`min(p, 1 - p)`); the location's distance `d_r` is the mean of the folded
//! values. A location whose bits agree across nearly all instances has a
//! distance near zero and carries little information.
//!
//! The threshold `HT` comes from the prefix mass of the distances sorted in
//! descending order: `N(g)` is the number of leading groups needed to reach
//! `g%` of the total mass `D`. Scanning `u = 100, 99, ..., 2`, the first `u`
//! whose increment `N(u) - N(u-1)` is at most `r / 50` fixes `p = u` and
//! `HT = e_{N(p)}`. Locations with `d_r >= HT` are kept.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bits of an average hash; bit `j` is set iff `v[j] > mean(v)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HashSignature(Vec<bool>);

impl HashSignature {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn signature(v: &[f64]) -> Result<HashSignature> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    let mean = mean(v);
    Ok(HashSignature(v.iter().map(|&x| x > mean).collect()))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Folds a ones-fraction onto `[0, 0.5]`.
pub fn fold_bit_mean(ones_fraction: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&ones_fraction) {
        return Err(Error::OutOfRange(ones_fraction));
    }
    Ok(if ones_fraction < 0.5 { ones_fraction } else { 1.0 - ones_fraction })
}

/// All signatures observed at one location, summarised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationGroup {
    pub location: usize,
    pub bit_means: Vec<f64>,
    pub folded: Vec<f64>,
    pub distance: f64,
}

impl LocationGroup {
    /// Builds the group from per-bit counts of ones over `n_instances`.
    /// Integer counts make the result independent of instance order.
    pub fn from_counts(location: usize, ones: &[u64], n_instances: u64) -> Result<Self> {
        if ones.is_empty() {
            return Err(Error::EmptyVector);
        }
        let n = n_instances.max(1) as f64;
        let bit_means: Vec<f64> = ones.iter().map(|&c| c as f64 / n).collect();
        let folded = bit_means.iter().map(|&p| fold_bit_mean(p)).collect::<Result<Vec<_>>>()?;
        let mut g = LocationGroup { location, bit_means, folded, distance: 0.0 };
        g.distance = group_distance(&g);
        Ok(g)
    }

    /// Test and diagnostic helper: a group with a single folded value.
    pub fn with_distance(location: usize, distance: f64) -> Self {
        LocationGroup { location, bit_means: alloc::vec![distance], folded: alloc::vec![distance], distance }
    }

    pub fn from_signatures<'a, I>(location: usize, signatures: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a HashSignature>,
    {
        let mut acc = BitCounter::default();
        for s in signatures {
            acc.add(s.bits());
        }
        acc.finish(location)
    }

    pub fn from_patches<'a, I>(location: usize, patches: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut acc = BitCounter::default();
        for p in patches {
            acc.add_patch(p)?;
        }
        acc.finish(location)
    }
}

/// Streaming per-bit ones counter for one location.
#[derive(Debug, Clone, Default)]
pub struct BitCounter {
    ones: Vec<u64>,
    n: u64,
}

impl BitCounter {
    pub fn add(&mut self, bits: &[bool]) {
        if self.ones.is_empty() {
            self.ones.resize(bits.len(), 0);
        }
        for (c, &b) in self.ones.iter_mut().zip(bits) {
            *c += u64::from(b);
        }
        self.n += 1;
    }

    /// Hashes `patch` and counts its bits without materialising a signature.
    pub fn add_patch(&mut self, patch: &[f64]) -> Result<()> {
        if patch.is_empty() {
            return Err(Error::EmptyVector);
        }
        if self.ones.is_empty() {
            self.ones.resize(patch.len(), 0);
        }
        let m = mean(patch);
        for (c, &x) in self.ones.iter_mut().zip(patch) {
            *c += u64::from(x > m);
        }
        self.n += 1;
        Ok(())
    }

    pub fn finish(&self, location: usize) -> Result<LocationGroup> {
        LocationGroup::from_counts(location, &self.ones, self.n)
    }
}

/// Mean of the folded bit means.
pub fn group_distance(g: &LocationGroup) -> f64 {
    if g.folded.is_empty() {
        return 0.0;
    }
    g.folded.iter().sum::<f64>() / g.folded.len() as f64
}

/// Smallest `m` such that the first `m` sorted distances reach `g%` of
/// `total`. `e` must be sorted in descending order.
pub fn n_of(g: u32, e: &[f64], total: f64) -> Result<usize> {
    if total <= 0.0 {
        return Err(Error::ZeroTotalMass);
    }
    // prefix >= total * g / 100, compared without dividing.
    let target = total * f64::from(g);
    let mut prefix = 0.0;
    for (i, &x) in e.iter().enumerate() {
        prefix += x;
        if prefix * 100.0 >= target {
            return Ok(i + 1);
        }
    }
    Ok(e.len())
}

/// How the threshold was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// `p` was the first percentage with a small enough increment.
    Percentage(u32),
    /// No percentage qualified; every location is kept.
    NoQualifyingPercentage,
    /// Every distance was zero; every location is kept and `HT = 0`.
    ZeroMass,
    /// Screening was switched off.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashThresholdResult {
    /// Original location indices by descending distance, ties by location.
    pub order: Vec<usize>,
    /// Distances along `order` (`e_1 >= e_2 >= ...`).
    pub sorted: Vec<f64>,
    pub total_mass: f64,
    /// `n_table[g - 1] = N(g)` for `g = 1..=100`; empty when not computed.
    pub n_table: Vec<usize>,
    pub selection: Selection,
    pub ht: f64,
    /// Retained location indices, ascending.
    pub keep: Vec<usize>,
}

impl HashThresholdResult {
    pub fn n(&self, g: u32) -> Option<usize> {
        self.n_table.get((g as usize).checked_sub(1)?).copied()
    }

    pub fn p(&self) -> Option<u32> {
        match self.selection {
            Selection::Percentage(p) => Some(p),
            _ => None,
        }
    }

    /// Result that keeps every location, used when screening is disabled.
    pub fn keep_all(groups: &[LocationGroup]) -> Self {
        let (order, sorted) = sort_desc(groups);
        HashThresholdResult {
            total_mass: sorted.iter().sum(),
            ht: sorted.last().copied().unwrap_or(0.0),
            keep: ascending_locations(groups),
            order,
            sorted,
            n_table: Vec::new(),
            selection: Selection::Disabled,
        }
    }
}

fn sort_desc(groups: &[LocationGroup]) -> (Vec<usize>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..groups.len()).collect();
    idx.sort_by(|&a, &b| {
        groups[b].distance.total_cmp(&groups[a].distance).then(groups[a].location.cmp(&groups[b].location))
    });
    (idx.iter().map(|&i| groups[i].location).collect(), idx.iter().map(|&i| groups[i].distance).collect())
}

fn ascending_locations(groups: &[LocationGroup]) -> Vec<usize> {
    let mut v: Vec<usize> = groups.iter().map(|g| g.location).collect();
    v.sort_unstable();
    v
}

pub fn hashing_threshold(groups: &[LocationGroup]) -> Result<HashThresholdResult> {
    if groups.is_empty() {
        return Err(Error::NoGroups);
    }
    let (order, sorted) = sort_desc(groups);
    let total: f64 = sorted.iter().sum();
    if total <= 0.0 {
        return Ok(HashThresholdResult {
            order,
            sorted,
            total_mass: total,
            n_table: Vec::new(),
            selection: Selection::ZeroMass,
            ht: 0.0,
            keep: ascending_locations(groups),
        });
    }
    let n_table = (1..=100).map(|g| n_of(g, &sorted, total)).collect::<Result<Vec<_>>>()?;
    let r = groups.len() as f64;
    let p = (2..=100u32).rev().find(|&u| {
        let step = n_table[u as usize - 1] - n_table[u as usize - 2];
        step as f64 <= r / 50.0
    });
    let (selection, ht) = match p {
        Some(p) => (Selection::Percentage(p), sorted[n_table[p as usize - 1] - 1]),
        None => (Selection::NoQualifyingPercentage, *sorted.last().unwrap()),
    };
    let mut keep: Vec<usize> = groups.iter().filter(|g| g.distance >= ht).map(|g| g.location).collect();
    keep.sort_unstable();
    Ok(HashThresholdResult { order, sorted, total_mass: total, n_table, selection, ht, keep })
}

/// Screens location groups; returns the threshold result and the retained
/// locations in ascending original order. Zero total mass keeps everything.
pub fn screen(groups: &[LocationGroup]) -> Result<(HashThresholdResult, Vec<usize>)> {
    let result = hashing_threshold(groups)?;
    if result.keep.is_empty() {
        return Err(Error::AllLocationsEliminated);
    }
    let keep = result.keep.clone();
    Ok((result, keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn example_one_groups() -> Vec<LocationGroup> {
        // Two instances, four locations, 2-bit signatures.
        let sigs = [
            [[false, true], [false, true]],
            [[true, true], [true, true]],
            [[true, false], [false, true]],
            [[false, true], [true, false]],
        ];
        sigs.iter()
            .enumerate()
            .map(|(r, pair)| {
                let s: Vec<HashSignature> = pair.iter().map(|b| HashSignature(b.to_vec())).collect();
                LocationGroup::from_signatures(r, &s).unwrap()
            })
            .collect()
    }

    #[test]
    fn signature_examples() {
        assert_eq!(signature(&[0.2, 0.8]).unwrap().bits(), &[false, true]);
        assert_eq!(signature(&[0.3, 0.3, 0.3]).unwrap().bits(), &[false, false, false]);
        assert_eq!(signature(&[0.1, 0.5, 0.9]).unwrap().bits(), &[false, false, true]);
        assert_eq!(signature(&[]).unwrap_err(), Error::EmptyVector);
    }

    #[test]
    fn fold_examples() {
        assert_eq!(fold_bit_mean(0.0).unwrap(), 0.0);
        assert_eq!(fold_bit_mean(0.5).unwrap(), 0.5);
        assert_eq!(fold_bit_mean(1.0).unwrap(), 0.0);
        assert_eq!(fold_bit_mean(0.25).unwrap(), 0.25);
        assert_eq!(fold_bit_mean(0.75).unwrap(), 0.25);
        assert_eq!(fold_bit_mean(1.5).unwrap_err(), Error::OutOfRange(1.5));
    }

    #[test]
    fn distance_examples() {
        let g = |folded: Vec<f64>| LocationGroup { location: 0, bit_means: folded.clone(), folded, distance: 0.0 };
        assert_eq!(group_distance(&g(vec![0.5, 0.5])), 0.5);
        assert_eq!(group_distance(&g(vec![0.0, 0.0])), 0.0);
        assert_eq!(group_distance(&g(vec![0.5, 0.0])), 0.25);
    }

    #[test]
    fn n_of_examples() {
        let e = [0.5, 0.5, 0.0, 0.0];
        assert_eq!(n_of(100, &e, 1.0).unwrap(), 2);
        assert_eq!(n_of(51, &e, 1.0).unwrap(), 2);
        assert_eq!(n_of(50, &e, 1.0).unwrap(), 1);
        assert_eq!(n_of(1, &e, 1.0).unwrap(), 1);
        for g in 1..=100 {
            assert_eq!(n_of(g, &[1.0], 1.0).unwrap(), 1);
        }
        assert_eq!(n_of(10, &[0.0], 0.0).unwrap_err(), Error::ZeroTotalMass);
    }

    #[test]
    fn example_one_end_to_end() {
        let groups = example_one_groups();
        let d: Vec<f64> = groups.iter().map(|g| g.distance).collect();
        assert_eq!(d, vec![0.0, 0.0, 0.5, 0.5]);
        let res = hashing_threshold(&groups).unwrap();
        assert_eq!(res.total_mass, 1.0);
        assert_eq!(res.sorted, vec![0.5, 0.5, 0.0, 0.0]);
        assert_eq!(res.order, vec![2, 3, 0, 1]);
        for g in 51..=100 {
            assert_eq!(res.n(g), Some(2));
        }
        for g in 1..=50 {
            assert_eq!(res.n(g), Some(1));
        }
        assert_eq!(res.selection, Selection::Percentage(100));
        assert_eq!(res.ht, 0.5);
        // w_1, w_2 of the sorted order are original locations 2 and 3.
        assert_eq!(res.keep, vec![2, 3]);
    }

    #[test]
    fn equal_distances_keep_everything() {
        let groups: Vec<LocationGroup> = (0..4).map(|r| LocationGroup::with_distance(r, 0.25)).collect();
        let res = hashing_threshold(&groups).unwrap();
        assert_eq!(res.n(100), Some(4));
        assert_eq!(res.n(99), Some(4));
        assert_eq!(res.p(), Some(100));
        assert_eq!(res.ht, 0.25);
        assert_eq!(res.keep, vec![0, 1, 2, 3]);
    }

    #[test]
    fn singleton_and_zero_mass() {
        let res = hashing_threshold(&[LocationGroup::with_distance(7, 0.3)]).unwrap();
        assert_eq!(res.p(), Some(100));
        assert_eq!(res.keep, vec![7]);

        let zeros: Vec<LocationGroup> = (0..3).map(|r| LocationGroup::with_distance(r, 0.0)).collect();
        let (res, keep) = screen(&zeros).unwrap();
        assert_eq!(res.selection, Selection::ZeroMass);
        assert_eq!(res.ht, 0.0);
        assert_eq!(keep, vec![0, 1, 2]);
        assert_eq!(hashing_threshold(&[]).unwrap_err(), Error::NoGroups);
    }

    #[test]
    fn constant_location_is_eliminated() {
        // Location 0: identical patches for every instance. Location 1 varies.
        let loc0 = [vec![0.0, 1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]];
        let loc1 = [vec![0.0, 1.0, 0.0, 1.0], vec![1.0, 0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0, 0.0]];
        let g0 = LocationGroup::from_patches(0, loc0.iter().map(|p| p.as_slice())).unwrap();
        let g1 = LocationGroup::from_patches(1, loc1.iter().map(|p| p.as_slice())).unwrap();
        assert_eq!(g0.distance, 0.0);
        let res = hashing_threshold(&[g0, g1]).unwrap();
        assert!(res.ht > 0.0);
        assert_eq!(res.keep, vec![1]);
    }

    /// Independent evaluator over integer distances (units of 1/32): builds
    /// every N(g) straight from the definition with exact integer prefix
    /// comparisons, then applies the downward scan.
    fn brute_force(distances: &[u32]) -> Option<(u32, u32, Vec<usize>)> {
        let mut order: Vec<usize> = (0..distances.len()).collect();
        order.sort_by(|&a, &b| distances[b].cmp(&distances[a]).then(a.cmp(&b)));
        let e: Vec<u64> = order.iter().map(|&i| u64::from(distances[i])).collect();
        let total: u64 = e.iter().sum();
        if total == 0 {
            return None;
        }
        let mut n = [0usize; 101];
        for g in 1..=100u64 {
            n[g as usize] = (1..=e.len()).find(|&m| e[..m].iter().sum::<u64>() * 100 >= total * g).unwrap();
        }
        let r = distances.len();
        for u in (2..=100).rev() {
            // N(u) - N(u-1) <= r/50  <=>  50 * step <= r
            if 50 * (n[u] - n[u - 1]) <= r {
                let ht = e[n[u] - 1] as u32;
                let keep = (0..r).filter(|&i| distances[i] >= ht).collect();
                return Some((u as u32, ht, keep));
            }
        }
        Some((0, *e.last().unwrap() as u32, (0..r).collect()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn threshold_matches_brute_force(raw in proptest::collection::vec(0u32..=16, 1..=10)) {
            // Multiples of 1/32 keep float prefix sums exact.
            let groups: Vec<LocationGroup> = raw
                .iter()
                .enumerate()
                .map(|(r, &k)| LocationGroup::with_distance(r, f64::from(k) / 32.0))
                .collect();
            let res = hashing_threshold(&groups).unwrap();
            match brute_force(&raw) {
                None => {
                    prop_assert_eq!(res.selection, Selection::ZeroMass);
                    prop_assert_eq!(res.keep, (0..raw.len()).collect::<Vec<_>>());
                }
                Some((p, ht, keep)) => {
                    let sel = if p == 0 { Selection::NoQualifyingPercentage } else { Selection::Percentage(p) };
                    prop_assert_eq!(res.selection, sel);
                    prop_assert_eq!(res.ht, f64::from(ht) / 32.0);
                    prop_assert_eq!(res.keep, keep);
                }
            }
        }

        #[test]
        fn threshold_invariants(raw in proptest::collection::vec(0.0f64..=0.5, 1..=60)) {
            let groups: Vec<LocationGroup> =
                raw.iter().enumerate().map(|(r, &d)| LocationGroup::with_distance(r, d)).collect();
            let res = hashing_threshold(&groups).unwrap();
            prop_assert!(res.sorted.windows(2).all(|w| w[0] >= w[1]));
            if !res.n_table.is_empty() {
                prop_assert!(res.n_table.windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(res.n_table[99] <= raw.len());
                prop_assert!(raw.contains(&res.ht));
            }
            for (r, &d) in raw.iter().enumerate() {
                prop_assert_eq!(res.keep.contains(&r), d >= res.ht);
            }
        }

        #[test]
        fn groups_are_instance_order_invariant(
            patches in proptest::collection::vec(proptest::collection::vec(0u8..=255, 4), 2..30),
            rot in 0usize..30,
        ) {
            let as_f: Vec<Vec<f64>> =
                patches.iter().map(|p| p.iter().map(|&b| f64::from(b) / 255.0).collect()).collect();
            let a = LocationGroup::from_patches(0, as_f.iter().map(|p| p.as_slice())).unwrap();
            let mut shuffled = as_f.clone();
            shuffled.rotate_left(rot % as_f.len());
            shuffled.reverse();
            let b = LocationGroup::from_patches(0, shuffled.iter().map(|p| p.as_slice())).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.folded.iter().all(|&f| (0.0..=0.5).contains(&f)));
            prop_assert!((0.0..=0.5).contains(&a.distance));
        }
    }
}
