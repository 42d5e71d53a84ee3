//! Files written by the stages. JSON documents all carry the config hash
//! and the hash of the dataset they were computed from.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use flowgate_core::bat::BatConfig;
use flowgate_core::dataset::{write_dataset, write_dataset_annotated, EncodedDataset, Vocabulary};
use flowgate_core::metrics::{ConfusionMatrix, CostMatrix, MetricsReport};
use flowgate_core::wrf::Forest;
use flowgate_core::{FeatureMask, FlowClass};

use crate::config::{PipelineConfig, Variant};
use crate::error::{io, require_path, CliError, Result};

pub const MASK_FILE: &str = "mask.json";
pub const MODEL_FILE: &str = "model.json";
pub const REPORT_FILE: &str = "report.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAIN_DATA_FILE: &str = "train.fgd";
pub const TEST_DATA_FILE: &str = "test.fgd";

/// SHA-256 of the dataset's canonical exchange-format bytes. Notes in the
/// file header do not change it.
pub fn dataset_hash(ds: &EncodedDataset) -> String {
    let mut bytes = Vec::new();
    write_dataset(ds, &mut bytes).expect("writing to memory");
    hex::encode(Sha256::digest(&bytes))
}

pub fn write_dataset_artifact(ds: &EncodedDataset, config_hash: &str, path: &Path) -> Result<()> {
    let mut bytes = Vec::new();
    write_dataset_annotated(ds, &[("config_hash", config_hash)], &mut bytes)
        .expect("writing to memory");
    std::fs::write(path, bytes).map_err(|e| io(path, e))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    require_path(path, what)?;
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::runtime(format!("{what} {}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskDocument {
    pub config_hash: String,
    pub dataset_hash: String,
    pub variant: Variant,
    pub mask: FeatureMask,
    pub selected: Vec<String>,
    pub n_selected: usize,
    pub fitness: f64,
    pub evaluations: usize,
    /// Best-so-far fitness; entry 0 is the initial swarm.
    pub trace: Vec<f64>,
    pub bat: BatConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub config_hash: String,
    pub dataset_hash: String,
    pub variant: Variant,
    pub feature_names: Vec<String>,
    /// Encoding of the symbolic columns, so raw KDD files can be scored.
    pub vocabulary: Vocabulary,
    pub forest: Forest,
}

impl ModelDocument {
    pub fn load(path: &Path) -> Result<Self> {
        let doc: ModelDocument = read_json(path, "model")?;
        let text = serde_json::to_string(&doc.forest).expect("forest serializes");
        Forest::from_json(&text)
            .map_err(|e| CliError::runtime(format!("model {}: {e}", path.display())))?;
        if doc.feature_names.len() != doc.forest.n_features {
            return Err(CliError::runtime(format!(
                "model {}: {} feature names for {} features",
                path.display(),
                doc.feature_names.len(),
                doc.forest.n_features
            )));
        }
        Ok(doc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub config_hash: String,
    /// Hash of the evaluated dataset; `compare` requires these to match.
    pub dataset_hash: String,
    pub model_dataset_hash: String,
    pub variant: Variant,
    pub n_selected: usize,
    pub metrics: MetricsReport,
    pub confusion: ConfusionMatrix,
    pub cost_matrix: CostMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub seconds: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub hash: String,
    pub rows: usize,
    pub class_counts: [usize; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub variant: Variant,
    pub seeds: ManifestSeeds,
    pub config: PipelineConfig,
    pub train: Option<DatasetRecord>,
    pub test: Option<DatasetRecord>,
    pub stages: Vec<StageRecord>,
    pub status: RunStatus,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSeeds {
    pub sampling: u64,
    pub fitness: u64,
    pub selection: u64,
    pub forest: u64,
}

impl Manifest {
    pub fn new(config: &PipelineConfig) -> Self {
        Self {
            tool: "flowgate".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            variant: config.variant(),
            seeds: ManifestSeeds {
                sampling: config.seeds.sampling,
                fitness: config.seeds.fitness,
                selection: config.bat.seed,
                forest: config.seeds.forest,
            },
            config: config.clone(),
            train: None,
            test: None,
            stages: Vec::new(),
            status: RunStatus::Running,
            failed_stage: None,
            error: None,
        }
    }
}

pub fn dataset_record(ds: &EncodedDataset) -> DatasetRecord {
    DatasetRecord {
        hash: dataset_hash(ds),
        rows: ds.n_rows(),
        class_counts: ds.class_counts(),
    }
}

/// `# config_hash=<hex>` then `row,predicted,actual`.
pub fn predictions_csv(config_hash: &str, predicted: &[FlowClass], actual: &[FlowClass]) -> String {
    let mut out = format!("# config_hash={config_hash}\nrow,predicted,actual\n");
    for (i, (p, a)) in predicted.iter().zip(actual).enumerate() {
        out.push_str(&format!("{i},{p},{a}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_hash_ignores_notes() {
        let ds = EncodedDataset::new(
            vec!["a".into()],
            vec![1.0, 2.0],
            vec![FlowClass::Normal, FlowClass::R2L],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.fgd");
        write_dataset_artifact(&ds, "cafe", &p).unwrap();
        let back = flowgate_core::dataset::read_dataset_file(&p).unwrap();
        assert_eq!(dataset_hash(&back), dataset_hash(&ds));
        assert!(std::fs::read_to_string(&p).unwrap().contains("cafe"));
    }

    #[test]
    fn predictions_layout() {
        let csv = predictions_csv("ab", &[FlowClass::DoS], &[FlowClass::Normal]);
        assert_eq!(
            csv,
            "# config_hash=ab\nrow,predicted,actual\n0,DoS,Normal\n"
        );
    }
}
