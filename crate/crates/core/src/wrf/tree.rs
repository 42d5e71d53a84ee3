//! Gini CART trees over a feature mask.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::FeatureMask;
use crate::dataset::{EncodedDataset, FlowClass, N_CLASSES};

/// How many masked features are examined at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// ⌈√p⌉ of the `p` selected features.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, available: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (available as f64).sqrt().ceil() as usize,
            MaxFeatures::All => available,
            MaxFeatures::Count(c) => c,
        };
        k.clamp(1, available.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    /// `None` grows until nodes are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: Some(20),
            min_samples_leaf: 2,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

impl TreeConfig {
    /// Single depth-capped tree over every masked feature.
    pub fn probe(max_depth: usize) -> Self {
        Self {
            max_depth: Some(max_depth),
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        class: FlowClass,
        /// Training samples per class that reached this leaf.
        counts: [u32; N_CLASSES],
    },
    Split {
        feature: usize,
        /// Samples with `value <= threshold` go left.
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub depth: usize,
    pub node_count: usize,
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64]) -> FlowClass {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Distinct split features, ascending.
    pub fn split_features(&self) -> Vec<usize> {
        fn walk(n: &Node, out: &mut Vec<usize>) {
            if let Node::Split {
                feature,
                left,
                right,
                ..
            } = n
            {
                out.push(*feature);
                walk(left, out);
                walk(right, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn gini(counts: &[u32; N_CLASSES], total: u32) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

/// Majority class; ties go to the lowest class code.
fn majority(counts: &[u32; N_CLASSES]) -> FlowClass {
    let mut best = 0;
    for j in 1..N_CLASSES {
        if counts[j] > counts[best] {
            best = j;
        }
    }
    FlowClass::ALL[best]
}

struct Builder<'a, R> {
    ds: &'a EncodedDataset,
    features: Vec<usize>,
    cfg: &'a TreeConfig,
    mtry: usize,
    rng: &'a mut R,
    node_count: usize,
    depth: usize,
    scratch: Vec<(f64, u8)>,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> Node {
        self.node_count += 1;
        self.depth = self.depth.max(depth);
        let mut counts = [0u32; N_CLASSES];
        for &r in &rows {
            counts[self.ds.label(r).code()] += 1;
        }
        let leaf = Node::Leaf {
            class: majority(&counts),
            counts,
        };
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.cfg.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || rows.len() < 2 * self.cfg.min_samples_leaf.max(1) {
            return leaf;
        }
        let Some(split) = self.best_split(&rows) else {
            return leaf;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.ds.value(r, split.feature) <= split.threshold);
        let left = self.build(left, depth + 1);
        let right = self.build(right, depth + 1);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Examines `mtry` random features; keeps drawing past `mtry` only while
    /// no admissible split has been found.
    fn best_split(&mut self, rows: &[usize]) -> Option<Split> {
        self.features.shuffle(self.rng);
        let mut best: Option<Split> = None;
        let features = self.features.clone();
        for (tried, &f) in features.iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            if let Some(s) = self.best_split_on(rows, f) {
                if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                    best = Some(s);
                }
            }
        }
        best
    }

    fn best_split_on(&mut self, rows: &[usize], feature: usize) -> Option<Split> {
        let min_leaf = self.cfg.min_samples_leaf.max(1);
        let scratch = &mut self.scratch;
        scratch.clear();
        scratch.extend(
            rows.iter()
                .map(|&r| (self.ds.value(r, feature), self.ds.label(r).code() as u8)),
        );
        scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = scratch.len();
        if scratch[0].0 == scratch[n - 1].0 {
            return None;
        }
        let mut total = [0u32; N_CLASSES];
        for &(_, c) in scratch.iter() {
            total[c as usize] += 1;
        }
        let mut left = [0u32; N_CLASSES];
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n - 1 {
            left[scratch[i].1 as usize] += 1;
            if scratch[i].0 == scratch[i + 1].0 {
                continue;
            }
            let nl = i + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let mut right = total;
            for j in 0..N_CLASSES {
                right[j] -= left[j];
            }
            let imp = (nl as f64 * gini(&left, nl as u32) + nr as f64 * gini(&right, nr as u32))
                / n as f64;
            if best.is_none_or(|(b, _)| imp < b) {
                best = Some((imp, i));
            }
        }
        best.map(|(impurity, i)| {
            let (a, b) = (scratch[i].0, scratch[i + 1].0);
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b || threshold < a {
                threshold = a;
            }
            Split {
                feature,
                threshold,
                impurity,
            }
        })
    }
}

/// Grows a CART tree on `rows` of `ds` (duplicates allowed, as in a bootstrap),
/// splitting only on features set in `mask`.
///
/// Panics if `rows` is empty or the mask has no set bits.
pub fn train_tree<R: Rng>(
    ds: &EncodedDataset,
    rows: &[usize],
    mask: &FeatureMask,
    cfg: &TreeConfig,
    rng: &mut R,
) -> DecisionTree {
    assert!(!rows.is_empty(), "cannot grow a tree on zero samples");
    assert_eq!(mask.len(), ds.n_features(), "mask width must match dataset");
    let features = mask.ones_indices();
    assert!(!features.is_empty(), "mask selects no features");
    let mtry = cfg.max_features.resolve(features.len());
    let mut builder = Builder {
        ds,
        features,
        cfg,
        mtry,
        rng,
        node_count: 0,
        depth: 0,
        scratch: Vec::with_capacity(rows.len()),
    };
    let root = builder.build(rows.to_vec(), 0);
    DecisionTree {
        root,
        depth: builder.depth,
        node_count: builder.node_count,
    }
}
