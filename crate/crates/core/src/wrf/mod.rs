//! Cost-sensitive weighted random forest.
//!
//! Differs from a plain random forest in three places:
//!
//! * bootstraps are drawn by roulette wheel from per-sample weights that
//!   start from a class prior (`w_j / N_j` per sample),
//! * after each tree the weights are multiplied by `β·e^{±a_m}` and
//!   renormalized, where `a_m` comes from the tree's training error and β
//!   depends on whether the sample's class currently holds more or less than
//!   its share of the weight,
//! * the ensemble votes with per-tree, per-class accuracies instead of one
//!   vote per tree.
//!
//! [`WrfConfig::classical`] switches all three off.

mod forest;
mod tree;
mod weights;

pub use forest::{
    fit, fit_observed, per_class_accuracy, predict_batch, tree_accuracy, weighted_vote,
    AccuracyMatrix, AccuracySource, ClassWeights, Forest, TreeScore, WrfConfig, FORMAT_VERSION,
};
pub use tree::{train_tree, DecisionTree, MaxFeatures, Node, TreeConfig};
pub use weights::{
    beta_factor, init_weights, majority_partition, roulette_sample, tree_accuracy_from_error,
    update_weights, ClassWeightProfile, SampleWeights, BETA_EXPONENT_CLAMP, ERROR_CLAMP,
};

use crate::dataset::FlowClass;

#[derive(Debug, thiserror::Error)]
pub enum WrfError {
    #[error("class {0} has a positive prior weight but no training samples")]
    WeightedClassWithoutSamples(FlowClass),
    #[error("invalid class weight profile: {0}")]
    InvalidProfile(String),
    #[error("invalid forest config: {0}")]
    InvalidConfig(String),
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("feature mask selects no features")]
    EmptyMask,
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("class {0} has no samples to measure accuracy on")]
    ClassAbsent(FlowClass),
    #[error("weight invariant violated: {0}")]
    InvariantBreach(String),
    #[error("tree {tree}: {source}")]
    Tree {
        tree: usize,
        #[source]
        source: Box<WrfError>,
    },
    #[error("model document: {0}")]
    Serde(String),
}
