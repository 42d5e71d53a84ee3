//! Two-stage flow intrusion detection.
//!
//! Stage one searches for a compact feature subset with a binary bat
//! algorithm whose swarm is split into equal-size subgroups and perturbed by
//! bitwise differential mutation ([`bat`]). Stage two classifies flows into
//! five traffic categories with a random forest that re-weights samples per
//! tree and votes with per-class tree accuracies ([`wrf`]).

pub mod bat;
pub mod bits;
pub mod dataset;
pub mod rng;
pub mod synth;

pub use bits::{BitString, FeatureMask};
pub use dataset::{EncodedDataset, FlowClass, FlowRecord, N_CLASSES};
pub mod kmeans;
pub mod metrics;
pub mod wrf;
