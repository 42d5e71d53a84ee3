//! Experiment configuration, read from TOML.
//!
//! ```toml
//! out_dir = "runs/improved"
//!
//! [data]
//! train = "kddcup.data_10_percent"
//! test = "corrected"
//! train_targets = [17129, 3107, 35700, 52, 1126]
//! test_targets = [12183, 1880, 21705, 228, 1468]
//!
//! [seeds]
//! sampling = 1
//! fitness = 2
//! forest = 3
//!
//! [bat]
//! swarm_size = 40
//! subgroups = 4
//! seed = 4
//!
//! [forest]
//! n_trees = 100
//! ```
//!
//! Every section and key is optional; omitted values take their defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use flowgate_core::bat::{BatConfig, PROBE_DEPTH};
use flowgate_core::dataset::ClassCounts;
use flowgate_core::wrf::{ClassWeights, WrfConfig};

use crate::error::{require_path, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Where `pipeline` writes its artifacts. Not part of the config hash.
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub seeds: Seeds,
    pub fitness: FitnessConfig,
    pub bat: BatConfig,
    pub forest: WrfConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("flowgate-run"),
            data: DataConfig::default(),
            seeds: Seeds::default(),
            fitness: FitnessConfig::default(),
            bat: BatConfig::default(),
            forest: WrfConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

/// Raw KDD files or previously ingested datasets; the format is detected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Rows per class after down-sampling; all rows when absent.
    pub train_targets: Option<ClassCounts>,
    pub test_targets: Option<ClassCounts>,
}

/// Seeds for the stages that do not carry their own. The bat algorithm's
/// seed is `bat.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub sampling: u64,
    pub fitness: u64,
    pub forest: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            sampling: 1,
            fitness: 2,
            forest: 3,
        }
    }
}

/// Data handed to the feature-selection wrapper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessConfig {
    /// Training rows are first down-sampled, class-proportionally, to this many.
    pub max_rows: usize,
    /// Share of those rows used to score each mask.
    pub valid_fraction: f64,
    pub probe_depth: usize,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        Self {
            max_rows: 6000,
            valid_fraction: 0.3,
            probe_depth: PROBE_DEPTH,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// CSV cost matrix; the KDD Cup 1999 matrix when absent.
    pub cost_matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Plain binary BA and a plain random forest.
    Baseline,
    /// Subgroups, mutation, self-learning, and the full weighted forest.
    Improved,
    Custom,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        require_path(path, "config file")?;
        let text = std::fs::read_to_string(path).map_err(|e| crate::error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 over the canonical JSON form, ignoring `out_dir`.
    pub fn hash(&self) -> String {
        let canonical = PipelineConfig {
            out_dir: PathBuf::new(),
            ..self.clone()
        };
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn variant(&self) -> Variant {
        let bat_baseline = self.bat.is_baseline();
        let forest_classical = self.forest.is_classical();
        if bat_baseline && forest_classical {
            Variant::Baseline
        } else if !bat_baseline
            && self.bat.subgroups > 1
            && self.bat.mutation
            && self.bat.self_learning
            && self.forest.update_weights
            && self.forest.weighted_vote
            && self.forest.class_weights != ClassWeights::Uniform
        {
            Variant::Improved
        } else {
            Variant::Custom
        }
    }

    /// Value checks, without touching the filesystem.
    pub fn validate_values(&self) -> Result<()> {
        self.bat.validate()?;
        self.forest.validate()?;
        let f = &self.fitness;
        if !(f.valid_fraction > 0.0 && f.valid_fraction < 1.0) {
            return Err(CliError::config(format!(
                "fitness.valid_fraction must be in (0, 1), got {}",
                f.valid_fraction
            )));
        }
        if f.max_rows < 2 {
            return Err(CliError::config("fitness.max_rows must be at least 2"));
        }
        if f.probe_depth == 0 {
            return Err(CliError::config("fitness.probe_depth must be at least 1"));
        }
        Ok(())
    }

    /// Full validation for `pipeline`: values, plus every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        self.validate_values()?;
        let train = self
            .data
            .train
            .as_deref()
            .ok_or_else(|| CliError::config("data.train is required"))?;
        let test = self
            .data
            .test
            .as_deref()
            .ok_or_else(|| CliError::config("data.test is required"))?;
        require_path(train, "training data")?;
        require_path(test, "test data")?;
        if let Some(cost) = &self.evaluation.cost_matrix {
            require_path(cost, "cost matrix")?;
        }
        Ok(())
    }

    /// Switches every stage to its plain counterpart, keeping sizes and seeds.
    pub fn into_baseline(self) -> Self {
        let forest = WrfConfig {
            class_weights: ClassWeights::Uniform,
            update_weights: false,
            weighted_vote: false,
            ..self.forest
        };
        Self {
            bat: self.bat.baseline(),
            forest,
            ..self
        }
    }
}
