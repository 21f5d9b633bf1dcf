use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ForestKind, Samples};
use crate::rng::Rng;

/// One node of a flattened tree. Values `<= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    /// `offset` indexes the tree's leaf-distribution buffer; `count` is the
    /// number of (possibly duplicated) training samples that reached the leaf.
    Leaf {
        offset: u32,
        count: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    leaf_probs: Vec<f64>,
    n_classes: usize,
}

/// Best split found so far at a node.
///
/// Minimising weighted Gini impurity is the same as maximising
/// `sum_c left_c^2 / n_left + sum_c right_c^2 / n_right`, kept here as the
/// exact fraction `num / den` so equal-gain splits compare equal. Ties go to
/// the lowest feature index, then the lowest threshold.
#[derive(Clone, Copy)]
struct Candidate {
    num: u128,
    den: u128,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                let (a, b) = (self.num * o.den, o.num * self.den);
                a > b
                    || (a == b
                        && (self.feature < o.feature || (self.feature == o.feature && self.threshold < o.threshold)))
            }
        }
    }
}

struct Grower<'a, S: Samples + ?Sized> {
    samples: &'a S,
    kind: ForestKind,
    max_features: usize,
    n_classes: usize,
    pool: Vec<usize>,
    buf: Vec<(f64, u32)>,
    values: Vec<f64>,
    nodes: Vec<TreeNode>,
    leaf_probs: Vec<f64>,
}

impl DecisionTree {
    /// Grows one tree on `indices` (duplicates allowed) until every node is
    /// pure or holds fewer than two samples.
    ///
    /// `max_features` is the number of non-constant candidate features
    /// evaluated per split for [`ForestKind::Random`]; completely-random trees
    /// always use one.
    pub fn grow<S: Samples + ?Sized>(
        samples: &S,
        mut indices: Vec<usize>,
        kind: ForestKind,
        max_features: usize,
        rng: &mut Rng,
    ) -> DecisionTree {
        let n_classes = samples.n_classes();
        let mut g = Grower {
            samples,
            kind,
            max_features: max_features.max(1),
            n_classes,
            pool: (0..samples.n_features()).collect(),
            buf: Vec::with_capacity(indices.len()),
            values: Vec::new(),
            nodes: Vec::new(),
            leaf_probs: Vec::new(),
        };
        g.nodes.push(TreeNode::Leaf { offset: 0, count: 0 });
        let mut stack = alloc::vec![(0usize, 0usize, indices.len())];
        let mut counts = alloc::vec![0usize; n_classes];
        while let Some((slot, start, end)) = stack.pop() {
            let node = &mut indices[start..end];
            counts.iter_mut().for_each(|c| *c = 0);
            for &i in node.iter() {
                counts[samples.label(i)] += 1;
            }
            let n = node.len();
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let split = if n < 2 || pure { None } else { g.find_split(node, &counts, rng) };
            match split {
                None => {
                    let offset = g.leaf_probs.len() as u32;
                    let denom = n.max(1) as f64;
                    g.leaf_probs.extend(counts.iter().map(|&c| c as f64 / denom));
                    g.nodes[slot] = TreeNode::Leaf { offset, count: n as u32 };
                }
                Some((feature, threshold)) => {
                    let mid = partition(node, |i| samples.value(i, feature) <= threshold);
                    let left = g.nodes.len();
                    g.nodes.push(TreeNode::Leaf { offset: 0, count: 0 });
                    g.nodes.push(TreeNode::Leaf { offset: 0, count: 0 });
                    g.nodes[slot] = TreeNode::Split {
                        feature: feature as u32,
                        threshold,
                        left: left as u32,
                        right: left as u32 + 1,
                    };
                    // Right first so the left subtree is laid out next.
                    stack.push((left + 1, start + mid, end));
                    stack.push((left, start, start + mid));
                }
            }
        }
        DecisionTree { nodes: g.nodes, leaf_probs: g.leaf_probs, n_classes }
    }

    /// A tree that is a single leaf with the given distribution.
    pub fn constant(distribution: Vec<f64>, count: u32) -> DecisionTree {
        let n_classes = distribution.len();
        DecisionTree { nodes: alloc::vec![TreeNode::Leaf { offset: 0, count }], leaf_probs: distribution, n_classes }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_probs.len() / self.n_classes.max(1)
    }

    /// Leaf class distribution reached by `x`.
    pub fn leaf_distribution(&self, x: &[f64]) -> &[f64] {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if x[feature as usize] <= threshold { left } else { right } as usize;
                }
                TreeNode::Leaf { offset, .. } => {
                    let o = offset as usize;
                    return &self.leaf_probs[o..o + self.n_classes];
                }
            }
        }
    }

    /// Split `(feature, threshold)` at the root, if the root is internal.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            TreeNode::Split { feature, threshold, .. } => Some((*feature as usize, *threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }

    /// Preorder list of split decisions, `None` for leaves. Two trees with the
    /// same structure produce the same list.
    pub fn structure(&self) -> Vec<Option<(usize, f64)>> {
        self.nodes
            .iter()
            .map(|n| match *n {
                TreeNode::Split { feature, threshold, .. } => Some((feature as usize, threshold)),
                TreeNode::Leaf { .. } => None,
            })
            .collect()
    }
}

impl<S: Samples + ?Sized> Grower<'_, S> {
    fn find_split(&mut self, node: &[usize], counts: &[usize], rng: &mut Rng) -> Option<(usize, f64)> {
        match self.kind {
            ForestKind::Random => self.best_gini_split(node, counts, rng),
            ForestKind::CompletelyRandom => self.random_split(node, rng),
        }
    }

    /// Draws the next feature of a lazily shuffled pool. `drawn` features so
    /// far occupy `pool[..drawn]`.
    fn draw_feature(&mut self, drawn: usize, rng: &mut Rng) -> usize {
        let j = rng.random_range(drawn..self.pool.len());
        self.pool.swap(drawn, j);
        self.pool[drawn]
    }

    fn best_gini_split(&mut self, node: &[usize], counts: &[usize], rng: &mut Rng) -> Option<(usize, f64)> {
        let n = node.len();
        let total_sq: u64 = counts.iter().map(|&c| (c as u64) * (c as u64)).sum();
        let mut best: Option<Candidate> = None;
        let mut left = alloc::vec![0usize; self.n_classes];
        let mut right = alloc::vec![0usize; self.n_classes];
        let mut evaluated = 0;
        let mut drawn = 0;
        while evaluated < self.max_features && drawn < self.pool.len() {
            let feature = self.draw_feature(drawn, rng);
            drawn += 1;
            self.buf.clear();
            self.buf.extend(node.iter().map(|&i| (self.samples.value(i, feature), self.samples.label(i) as u32)));
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.buf[0].0 == self.buf[n - 1].0 {
                continue;
            }
            evaluated += 1;
            left.iter_mut().for_each(|c| *c = 0);
            right.copy_from_slice(counts);
            let (mut left_sq, mut right_sq) = (0u64, total_sq);
            for i in 0..n - 1 {
                let c = self.buf[i].1 as usize;
                left_sq += (2 * left[c] + 1) as u64;
                right_sq -= (2 * right[c] - 1) as u64;
                left[c] += 1;
                right[c] -= 1;
                let (v, next) = (self.buf[i].0, self.buf[i + 1].0);
                if v == next {
                    continue;
                }
                let (nl, nr) = ((i + 1) as u128, (n - i - 1) as u128);
                let cand = Candidate {
                    num: left_sq as u128 * nr + right_sq as u128 * nl,
                    den: nl * nr,
                    feature,
                    threshold: midpoint(v, next),
                };
                if cand.beats(&best) {
                    best = Some(cand);
                }
            }
        }
        best.map(|c| (c.feature, c.threshold))
    }

    fn random_split(&mut self, node: &[usize], rng: &mut Rng) -> Option<(usize, f64)> {
        let mut drawn = 0;
        while drawn < self.pool.len() {
            let feature = self.draw_feature(drawn, rng);
            drawn += 1;
            self.values.clear();
            self.values.extend(node.iter().map(|&i| self.samples.value(i, feature)));
            self.values.sort_unstable_by(f64::total_cmp);
            self.values.dedup();
            if self.values.len() < 2 {
                continue;
            }
            let gap = rng.random_range(0..self.values.len() - 1);
            let (lo, hi) = (self.values[gap], self.values[gap + 1]);
            let u: f64 = rng.random();
            let mut t = lo + u * (hi - lo);
            if t >= hi {
                t = lo;
            }
            return Some((feature, t));
        }
        None
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Stable-order-agnostic in-place partition; returns the count of elements
/// satisfying `pred`, which are moved to the front.
fn partition(xs: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut k = 0;
    for j in 0..xs.len() {
        if pred(xs[j]) {
            xs.swap(k, j);
            k += 1;
        }
    }
    k
}
