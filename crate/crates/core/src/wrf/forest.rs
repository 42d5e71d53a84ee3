use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{train_tree, DecisionTree, MaxFeatures, TreeConfig};
use super::weights::{
    init_weights, majority_partition, roulette_sample, tree_accuracy_from_error, update_weights,
    ClassWeightProfile, SampleWeights,
};
use super::WrfError;
use crate::bits::FeatureMask;
use crate::dataset::{self, EncodedDataset, FlowClass, N_CLASSES};
use crate::rng;

pub const FORMAT_VERSION: u32 = 1;

/// Where the per-class accuracy matrix is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum AccuracySource {
    /// The full training set, the same data used for `e_m`.
    #[default]
    Training,
    /// A stratified slice of the input held out from tree training.
    Holdout { fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeights {
    /// Normal 0.3, Probe 0.15, DoS 0.35, U2R 0.05, R2L 0.15.
    #[default]
    Default,
    /// Proportional to class frequency (every sample `1/N`).
    Uniform,
    Custom([f64; N_CLASSES]),
}

impl ClassWeights {
    pub fn profile(&self, counts: &dataset::ClassCounts) -> ClassWeightProfile {
        match self {
            ClassWeights::Default => ClassWeightProfile::DEFAULT,
            ClassWeights::Uniform => ClassWeightProfile::uniform(counts),
            ClassWeights::Custom(w) => ClassWeightProfile(*w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WrfConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
    pub class_weights: ClassWeights,
    /// Re-weight samples after each tree.
    pub update_weights: bool,
    /// Vote with the per-class accuracy matrix; when off every entry is 1.
    pub weighted_vote: bool,
    /// Swap the majority-class cells of the β table.
    pub invert_majority_beta: bool,
    pub accuracy_source: AccuracySource,
}

impl Default for WrfConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            tree: TreeConfig::default(),
            class_weights: ClassWeights::Default,
            update_weights: true,
            weighted_vote: true,
            invert_majority_beta: false,
            accuracy_source: AccuracySource::Training,
        }
    }
}

impl WrfConfig {
    /// Plain random forest: uniform bootstrap, no re-weighting, one vote per tree.
    pub fn classical() -> Self {
        Self {
            class_weights: ClassWeights::Uniform,
            update_weights: false,
            weighted_vote: false,
            ..Self::default()
        }
    }

    pub fn is_classical(&self) -> bool {
        self.class_weights == ClassWeights::Uniform && !self.update_weights && !self.weighted_vote
    }

    /// Checks everything that does not depend on the training data.
    pub fn validate(&self) -> Result<(), WrfError> {
        if self.n_trees == 0 {
            return Err(WrfError::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.tree.min_samples_leaf == 0 {
            return Err(WrfError::InvalidConfig(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if self.tree.max_features == MaxFeatures::Count(0) {
            return Err(WrfError::InvalidConfig(
                "max_features count must be at least 1".into(),
            ));
        }
        if let AccuracySource::Holdout { fraction } = self.accuracy_source {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(WrfError::InvalidConfig(format!(
                    "holdout fraction {fraction} outside (0, 1)"
                )));
            }
        }
        if let ClassWeights::Custom(w) = self.class_weights {
            ClassWeightProfile(w).validate()?;
        }
        Ok(())
    }
}

/// Accuracy of tree `m` on class `j`, stored as 5 class rows of `M` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyMatrix {
    pub rows: Vec<Vec<f64>>,
}

impl AccuracyMatrix {
    pub fn new() -> Self {
        Self {
            rows: vec![Vec::new(); N_CLASSES],
        }
    }

    pub fn ones(n_trees: usize) -> Self {
        Self {
            rows: vec![vec![1.0; n_trees]; N_CLASSES],
        }
    }

    pub fn push_tree(&mut self, accuracy: [f64; N_CLASSES]) {
        for (row, a) in self.rows.iter_mut().zip(accuracy) {
            row.push(a);
        }
    }

    pub fn n_trees(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, tree: usize, class: FlowClass) -> f64 {
        self.rows[class.code()][tree]
    }
}

impl Default for AccuracyMatrix {
    fn default() -> Self {
        Self::new()
    }
}

/// `e_m` and `a_m` of one tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeScore {
    pub error_rate: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub format_version: u32,
    pub n_features: usize,
    pub mask: FeatureMask,
    pub config: WrfConfig,
    pub seed: u64,
    pub accuracy_matrix: AccuracyMatrix,
    pub tree_scores: Vec<TreeScore>,
    pub trees: Vec<DecisionTree>,
}

/// Error rate of `tree` over all rows of `ds`, with `a_m`.
pub fn tree_accuracy(tree: &DecisionTree, ds: &EncodedDataset) -> TreeScore {
    let wrong = (0..ds.n_rows())
        .filter(|&i| tree.predict(ds.row(i)) != ds.label(i))
        .count();
    let (error_rate, accuracy) = tree_accuracy_from_error(wrong as f64 / ds.n_rows().max(1) as f64);
    TreeScore {
        error_rate,
        accuracy,
    }
}

fn class_recalls(predictions: &[FlowClass], truth: &[FlowClass]) -> [Option<f64>; N_CLASSES] {
    let mut hit = [0usize; N_CLASSES];
    let mut total = [0usize; N_CLASSES];
    for (p, t) in predictions.iter().zip(truth) {
        total[t.code()] += 1;
        if p == t {
            hit[t.code()] += 1;
        }
    }
    std::array::from_fn(|j| (total[j] > 0).then(|| hit[j] as f64 / total[j] as f64))
}

/// Fraction of each class's samples in `ds` that `tree` gets right.
pub fn per_class_accuracy(
    tree: &DecisionTree,
    ds: &EncodedDataset,
) -> Result<[f64; N_CLASSES], WrfError> {
    let preds: Vec<FlowClass> = (0..ds.n_rows()).map(|i| tree.predict(ds.row(i))).collect();
    let recalls = class_recalls(&preds, ds.labels());
    let mut out = [0.0; N_CLASSES];
    for class in FlowClass::ALL {
        out[class.code()] = recalls[class.code()].ok_or(WrfError::ClassAbsent(class))?;
    }
    Ok(out)
}

/// `argmax_j Σ_m a[m][j]·[G_m(x) = j]`; ties go to the lowest class code.
pub fn weighted_vote(forest: &Forest, x: &[f64]) -> FlowClass {
    let mut score = [0.0f64; N_CLASSES];
    for (m, tree) in forest.trees.iter().enumerate() {
        let c = tree.predict(x);
        score[c.code()] += forest.accuracy_matrix.get(m, c);
    }
    let mut best = 0;
    for j in 1..N_CLASSES {
        if score[j] > score[best] {
            best = j;
        }
    }
    FlowClass::ALL[best]
}

/// Weighted vote for every row of `ds`, in row order.
pub fn predict_batch(forest: &Forest, ds: &EncodedDataset) -> Result<Vec<FlowClass>, WrfError> {
    if ds.n_features() != forest.n_features {
        return Err(WrfError::WidthMismatch {
            expected: forest.n_features,
            got: ds.n_features(),
        });
    }
    Ok((0..ds.n_rows())
        .into_par_iter()
        .map(|i| weighted_vote(forest, ds.row(i)))
        .collect())
}

/// Trains the forest. See [`fit_observed`].
pub fn fit(
    ds: &EncodedDataset,
    mask: &FeatureMask,
    cfg: &WrfConfig,
    seed: u64,
) -> Result<Forest, WrfError> {
    fit_observed(ds, mask, cfg, seed, |_| {})
}

/// Trains `cfg.n_trees` trees in sequence. Tree `m` is grown on a roulette
/// bootstrap of the current sample weights; its error rate over the training
/// set gives `a_m`, its per-class accuracies fill column `m` of the vote
/// matrix, and (when enabled) the weights are updated for tree `m + 1`.
/// `observe` sees the initial weights and every update.
pub fn fit_observed(
    ds: &EncodedDataset,
    mask: &FeatureMask,
    cfg: &WrfConfig,
    seed: u64,
    mut observe: impl FnMut(&SampleWeights),
) -> Result<Forest, WrfError> {
    if ds.is_empty() {
        return Err(WrfError::EmptyDataset);
    }
    if mask.len() != ds.n_features() {
        return Err(WrfError::WidthMismatch {
            expected: ds.n_features(),
            got: mask.len(),
        });
    }
    if mask.is_zero() {
        return Err(WrfError::EmptyMask);
    }
    cfg.validate()?;

    let (train, holdout) = match cfg.accuracy_source {
        AccuracySource::Training => (ds.clone(), None),
        AccuracySource::Holdout { fraction } => {
            let split_seed: u64 = rng::stream(seed, &[u64::MAX]).random();
            let (rest, held) = dataset::stratified_split(ds, fraction, split_seed);
            (rest, Some(held))
        }
    };

    let profile = cfg.class_weights.profile(&train.class_counts());
    let mut weights = init_weights(train.labels(), &profile)?;
    observe(&weights);

    let n = train.n_rows();
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut matrix = AccuracyMatrix::new();
    let mut scores = Vec::with_capacity(cfg.n_trees);

    for m in 0..cfg.n_trees {
        let mut r = rng::stream(seed, &[m as u64]);
        let bootstrap = roulette_sample(&weights, n, &mut r);
        let tree = train_tree(&train, &bootstrap, mask, &cfg.tree, &mut r);

        let preds: Vec<FlowClass> = (0..n).map(|i| tree.predict(train.row(i))).collect();
        let wrong = preds
            .iter()
            .zip(train.labels())
            .filter(|(p, t)| p != t)
            .count();
        let (error_rate, a_m) = tree_accuracy_from_error(wrong as f64 / n as f64);
        scores.push(TreeScore {
            error_rate,
            accuracy: a_m,
        });

        let row = match &holdout {
            None => class_recalls(&preds, train.labels()),
            Some(h) => {
                let hp: Vec<FlowClass> = (0..h.n_rows()).map(|i| tree.predict(h.row(i))).collect();
                class_recalls(&hp, h.labels())
            }
        };
        let mut accuracy = [0.0; N_CLASSES];
        for class in FlowClass::ALL {
            accuracy[class.code()] = match row[class.code()] {
                Some(a) => a,
                // only reachable for classes the profile gives no weight
                None if profile.0[class.code()] == 0.0 => 0.0,
                None => return Err(WrfError::ClassAbsent(class)),
            };
        }
        matrix.push_tree(accuracy);

        if cfg.update_weights {
            let majority = majority_partition(&weights, train.labels());
            weights = update_weights(
                &weights,
                &preds,
                train.labels(),
                a_m,
                &majority,
                cfg.invert_majority_beta,
            )
            .map_err(|e| WrfError::Tree {
                tree: m,
                source: Box::new(e),
            })?;
            observe(&weights);
        }
        trees.push(tree);
    }

    if !cfg.weighted_vote {
        matrix = AccuracyMatrix::ones(cfg.n_trees);
    }

    Ok(Forest {
        format_version: FORMAT_VERSION,
        n_features: ds.n_features(),
        mask: mask.clone(),
        config: cfg.clone(),
        seed,
        accuracy_matrix: matrix,
        tree_scores: scores,
        trees,
    })
}

impl Forest {
    pub fn predict(&self, ds: &EncodedDataset) -> Result<Vec<FlowClass>, WrfError> {
        predict_batch(self, ds)
    }

    pub fn to_json(&self) -> Result<String, WrfError> {
        serde_json::to_string_pretty(self).map_err(|e| WrfError::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, WrfError> {
        let forest: Forest =
            serde_json::from_str(text).map_err(|e| WrfError::Serde(e.to_string()))?;
        if forest.format_version != FORMAT_VERSION {
            return Err(WrfError::Serde(format!(
                "unsupported model format version {}",
                forest.format_version
            )));
        }
        if forest.accuracy_matrix.n_trees() != forest.trees.len()
            || forest.accuracy_matrix.rows.len() != N_CLASSES
        {
            return Err(WrfError::Serde(
                "accuracy matrix does not match tree count".into(),
            ));
        }
        Ok(forest)
    }
}
