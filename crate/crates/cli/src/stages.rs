//! The four pipeline stages as plain functions over in-memory data.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use flowgate_core::bat::{run, WrapperFitness};
use flowgate_core::dataset::{
    encode, encode_with, parse_kdd_csv, proportional_targets, read_dataset_file,
    stratified_downsample, stratified_split, ClassCounts, EncodedDataset, Vocabulary,
};
use flowgate_core::metrics::{confusion, report, CostMatrix};
use flowgate_core::wrf::{fit, TreeConfig};
use flowgate_core::{FeatureMask, FlowClass};

use crate::artifacts::{dataset_hash, MaskDocument, ModelDocument, ReportDocument};
use crate::config::PipelineConfig;
use crate::error::{io, require_path, CliError, Result};

const DATASET_MAGIC: &str = "flowgate-dataset";

/// Whether `path` holds an ingested dataset rather than a raw KDD file.
pub fn is_ingested(path: &Path) -> Result<bool> {
    let file = File::open(path).map_err(|e| io(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| io(path, e))?;
    Ok(first.starts_with(DATASET_MAGIC))
}

/// Reads an ingested dataset or parses and encodes a raw KDD file. With a
/// vocabulary, raw files are encoded with it and ingested files must match it.
pub fn load_dataset(path: &Path, vocabulary: Option<&Vocabulary>) -> Result<EncodedDataset> {
    require_path(path, "dataset")?;
    let ds = if is_ingested(path)? {
        let ds = read_dataset_file(path)?;
        if let Some(v) = vocabulary {
            if ds.vocabulary() != v {
                return Err(CliError::runtime(format!(
                    "{} was encoded with a different symbol vocabulary",
                    path.display()
                )));
            }
        }
        ds
    } else {
        let records = parse_kdd_csv(path)?;
        match vocabulary {
            Some(v) => encode_with(&records, v)?,
            None => encode(&records)?,
        }
    };
    Ok(ds)
}

pub fn ingest(
    path: &Path,
    targets: Option<&ClassCounts>,
    seed: u64,
    vocabulary: Option<&Vocabulary>,
) -> Result<EncodedDataset> {
    let ds = load_dataset(path, vocabulary)?;
    match targets {
        Some(t) => Ok(stratified_downsample(&ds, t, seed)?),
        None => Ok(ds),
    }
}

/// Class-proportional subsample of `train`, split into the wrapper's
/// training and scoring parts.
pub fn fitness_data(
    train: &EncodedDataset,
    cfg: &PipelineConfig,
) -> Result<(EncodedDataset, EncodedDataset)> {
    let targets = proportional_targets(&train.class_counts(), cfg.fitness.max_rows);
    let sample = stratified_downsample(train, &targets, cfg.seeds.fitness)?;
    let (fit, valid) = stratified_split(
        &sample,
        cfg.fitness.valid_fraction,
        cfg.seeds.fitness ^ 0x5eed,
    );
    if fit.is_empty() || valid.is_empty() {
        return Err(CliError::runtime(format!(
            "too few rows ({}) to split for feature selection",
            sample.n_rows()
        )));
    }
    Ok((fit, valid))
}

pub fn select_features(train: &EncodedDataset, cfg: &PipelineConfig) -> Result<MaskDocument> {
    let (fit, valid) = fitness_data(train, cfg)?;
    let fitness = WrapperFitness::new(fit, valid, cfg.bat.size_penalty, cfg.seeds.fitness)?
        .with_probe(TreeConfig::probe(cfg.fitness.probe_depth));
    let out = run(&fitness, &cfg.bat)?;
    let selected = out
        .best
        .ones_indices()
        .into_iter()
        .map(|i| train.feature_names()[i].clone())
        .collect();
    Ok(MaskDocument {
        config_hash: cfg.hash(),
        dataset_hash: dataset_hash(train),
        variant: cfg.variant(),
        n_selected: out.best.count_ones(),
        mask: out.best,
        selected,
        fitness: out.best_fitness,
        evaluations: out.evaluations,
        trace: out.trace,
        bat: cfg.bat.clone(),
    })
}

pub fn train_model(
    train: &EncodedDataset,
    mask: &FeatureMask,
    cfg: &PipelineConfig,
) -> Result<ModelDocument> {
    if mask.len() != train.n_features() {
        return Err(CliError::runtime(format!(
            "mask has {} bits but the data has {} features",
            mask.len(),
            train.n_features()
        )));
    }
    let forest = fit(train, mask, &cfg.forest, cfg.seeds.forest)?;
    Ok(ModelDocument {
        config_hash: cfg.hash(),
        dataset_hash: dataset_hash(train),
        variant: cfg.variant(),
        feature_names: train.feature_names().to_vec(),
        vocabulary: train.vocabulary().clone(),
        forest,
    })
}

pub fn classify(model: &ModelDocument, data: &EncodedDataset) -> Result<Vec<FlowClass>> {
    if data.feature_names() != model.feature_names.as_slice() {
        return Err(CliError::runtime(
            "data columns do not match the model's features",
        ));
    }
    Ok(model.forest.predict(data)?)
}

pub fn evaluate(
    model: &ModelDocument,
    data: &EncodedDataset,
    costs: &CostMatrix,
) -> Result<(ReportDocument, Vec<FlowClass>)> {
    let predicted = classify(model, data)?;
    let cm = confusion(data.labels(), &predicted)?;
    let doc = ReportDocument {
        config_hash: model.config_hash.clone(),
        dataset_hash: dataset_hash(data),
        model_dataset_hash: model.dataset_hash.clone(),
        variant: model.variant,
        n_selected: model.forest.mask.count_ones(),
        metrics: report(&cm, costs),
        confusion: cm,
        cost_matrix: *costs,
    };
    Ok((doc, predicted))
}

pub fn load_costs(path: Option<&Path>) -> Result<CostMatrix> {
    match path {
        None => Ok(CostMatrix::default()),
        Some(p) => {
            require_path(p, "cost matrix")?;
            let text = std::fs::read_to_string(p).map_err(|e| io(p, e))?;
            CostMatrix::from_csv(&text).map_err(|e| CliError::from(e).context(p.display()))
        }
    }
}
