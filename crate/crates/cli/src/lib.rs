//! The `flowgate` command line.
//!
//! Each stage reads and writes files so it can be rerun on its own;
//! `pipeline` chains them and records a manifest.

pub mod artifacts;
pub mod config;
mod error;
pub mod stages;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use flowgate_core::dataset::{read_dataset_file, ClassCounts};
use flowgate_core::FlowClass;

use artifacts::{
    dataset_record, predictions_csv, read_json, write_dataset_artifact, write_json, Manifest,
    MaskDocument, ModelDocument, ReportDocument, RunStatus, StageRecord, MANIFEST_FILE, MASK_FILE,
    MODEL_FILE, PREDICTIONS_FILE, REPORT_FILE, TEST_DATA_FILE, TRAIN_DATA_FILE,
};
use config::PipelineConfig;
use error::{io, require_path};
pub use error::{CliError, ErrorKind, Result};

#[derive(Debug, Parser)]
#[command(
    name = "flowgate",
    version,
    about = "Feature selection and weighted forests for flow intrusion detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and encode a KDD file, optionally down-sampling per class.
    Ingest(IngestArgs),
    /// Search for a feature mask with the bat algorithm.
    SelectFeatures(SelectArgs),
    /// Train a forest on the features of a mask.
    Train(TrainArgs),
    /// Write per-row predictions as CSV.
    Classify(ClassifyArgs),
    /// Score a model against labelled data.
    Evaluate(EvaluateArgs),
    /// Run ingest, select-features, train and evaluate from one config.
    Pipeline(PipelineArgs),
    /// Tabulate two evaluated runs side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw KDD file
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Rows per class: Normal,Probe,DoS,U2R,R2L
    #[arg(long, value_parser = parse_targets)]
    pub targets: Option<ClassCounts>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Reuse the symbol encoding of an ingested dataset, e.g. the training split
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Ingested training data
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `bat.seed`
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// A mask.json from select-features; all features when omitted
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `seeds.forest`
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Ingested or raw KDD data
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// 5x5 CSV cost matrix; the KDD Cup 1999 matrix when omitted
    #[arg(long)]
    pub cost: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write per-row predictions here
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `out_dir`
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Output directory of the first run
    pub run_a: PathBuf,
    /// Output directory of the second run
    pub run_b: PathBuf,
    /// Write the table as CSV here
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn parse_targets(s: &str) -> std::result::Result<ClassCounts, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(format!(
            "expected 5 comma-separated counts, got {}",
            parts.len()
        ));
    }
    let mut out = [0; 5];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| format!("not a count: {p:?}"))?;
    }
    Ok(out)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::SelectFeatures(a) => select_features(a),
        Command::Train(a) => train(a),
        Command::Classify(a) => classify(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Pipeline(a) => pipeline(a).map(|_| ()),
        Command::Compare(a) => compare(a).map(|text| print!("{text}")),
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.validate_values()?;
    Ok(cfg)
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json"));
}

fn ingest(a: IngestArgs) -> Result<()> {
    require_path(&a.input, "input")?;
    let vocab = match &a.vocab {
        Some(p) => {
            require_path(p, "vocabulary dataset")?;
            Some(read_dataset_file(p)?.vocabulary().clone())
        }
        None => None,
    };
    let ds = stages::ingest(&a.input, a.targets.as_ref(), a.seed, vocab.as_ref())?;
    let record = dataset_record(&ds);
    let mut cfg = PipelineConfig::default();
    cfg.seeds.sampling = a.seed;
    cfg.data.train = Some(a.input.clone());
    cfg.data.train_targets = a.targets;
    write_dataset_artifact(&ds, &cfg.hash(), &a.output)?;
    print_json(&serde_json::json!({ "output": a.output, "dataset": record }));
    Ok(())
}

fn select_features(a: SelectArgs) -> Result<()> {
    require_path(&a.data, "data")?;
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.bat.seed = s;
    }
    let train = read_dataset_file(&a.data)?;
    let doc = stages::select_features(&train, &cfg)?;
    write_json(&doc, &a.out)?;
    print_json(
        &serde_json::json!({ "mask": doc.mask, "n_selected": doc.n_selected, "fitness": doc.fitness }),
    );
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    require_path(&a.data, "data")?;
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seeds.forest = s;
    }
    let data = read_dataset_file(&a.data)?;
    let mask = match &a.mask {
        Some(p) => read_json::<MaskDocument>(p, "mask")?.mask,
        None => flowgate_core::FeatureMask::ones(data.n_features()),
    };
    let doc = stages::train_model(&data, &mask, &cfg)?;
    write_json(&doc, &a.out)?;
    print_json(&serde_json::json!({ "model": a.out, "trees": doc.forest.trees.len() }));
    Ok(())
}

fn load_model_and_data(
    model: &Path,
    data: &Path,
) -> Result<(ModelDocument, flowgate_core::EncodedDataset)> {
    require_path(data, "data")?;
    let model = ModelDocument::load(model)?;
    let ds = stages::load_dataset(data, Some(&model.vocabulary))?;
    Ok((model, ds))
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let (model, ds) = load_model_and_data(&a.model, &a.data)?;
    let predicted = stages::classify(&model, &ds)?;
    write_predictions(&model.config_hash, &predicted, ds.labels(), &a.out)
}

fn write_predictions(
    hash: &str,
    predicted: &[FlowClass],
    actual: &[FlowClass],
    path: &Path,
) -> Result<()> {
    std::fs::write(path, predictions_csv(hash, predicted, actual)).map_err(|e| io(path, e))
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let costs = stages::load_costs(a.cost.as_deref())?;
    let (model, ds) = load_model_and_data(&a.model, &a.data)?;
    let (doc, predicted) = stages::evaluate(&model, &ds, &costs)?;
    write_json(&doc, &a.out)?;
    if let Some(p) = &a.predictions {
        write_predictions(&doc.config_hash, &predicted, ds.labels(), p)?;
    }
    let m = &doc.metrics;
    print_json(
        &serde_json::json!({ "accuracy": m.accuracy, "false_alarm": m.false_alarm, "cost": m.cost }),
    );
    Ok(())
}

/// Runs every stage into `out_dir`, returning the final manifest. The
/// manifest is written even when a stage fails.
pub fn pipeline(a: PipelineArgs) -> Result<Manifest> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    if let Some(dir) = a.out_dir {
        cfg.out_dir = dir;
    }
    run_pipeline(&cfg)
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut manifest = Manifest::new(cfg);
    let result = run_stages(cfg, &mut manifest);
    match &result {
        Ok(()) => manifest.status = RunStatus::Succeeded,
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.failed_stage = manifest
                .stages
                .last()
                .filter(|s| !s.ok)
                .map(|s| s.stage.clone());
            manifest.error = Some(e.message.clone());
        }
    }
    write_json(&manifest, &dir.join(MANIFEST_FILE))?;
    result.map(|()| manifest)
}

fn stage<T>(manifest: &mut Manifest, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    manifest.stages.push(StageRecord {
        stage: name.into(),
        seconds: start.elapsed().as_secs_f64(),
        ok: out.is_ok(),
    });
    out.map_err(|e| e.context(format!("stage {name}")))
}

fn run_stages(cfg: &PipelineConfig, manifest: &mut Manifest) -> Result<()> {
    let dir = cfg.out_dir.clone();
    let hash = cfg.hash();
    let train_path = cfg.data.train.clone().expect("validated");
    let test_path = cfg.data.test.clone().expect("validated");

    let (train, test) = stage(manifest, "ingest", || {
        let train = stages::ingest(
            &train_path,
            cfg.data.train_targets.as_ref(),
            cfg.seeds.sampling,
            None,
        )?;
        let test = stages::ingest(
            &test_path,
            cfg.data.test_targets.as_ref(),
            cfg.seeds.sampling,
            Some(train.vocabulary()),
        )?;
        write_dataset_artifact(&train, &hash, &dir.join(TRAIN_DATA_FILE))?;
        write_dataset_artifact(&test, &hash, &dir.join(TEST_DATA_FILE))?;
        Ok((train, test))
    })?;
    manifest.train = Some(dataset_record(&train));
    manifest.test = Some(dataset_record(&test));

    let mask = stage(manifest, "select-features", || {
        let doc = stages::select_features(&train, cfg)?;
        write_json(&doc, &dir.join(MASK_FILE))?;
        Ok(doc.mask)
    })?;

    let model = stage(manifest, "train", || {
        let doc = stages::train_model(&train, &mask, cfg)?;
        write_json(&doc, &dir.join(MODEL_FILE))?;
        Ok(doc)
    })?;

    stage(manifest, "evaluate", || {
        let costs = stages::load_costs(cfg.evaluation.cost_matrix.as_deref())?;
        let (doc, predicted) = stages::evaluate(&model, &test, &costs)?;
        write_json(&doc, &dir.join(REPORT_FILE))?;
        write_predictions(
            &hash,
            &predicted,
            test.labels(),
            &dir.join(PREDICTIONS_FILE),
        )
    })
}

/// Rows of the comparison table: metric name and its value in a report.
pub fn comparison_rows(report: &ReportDocument) -> Vec<(String, f64)> {
    let m = &report.metrics;
    let mut rows = vec![
        ("accuracy".to_string(), m.accuracy),
        ("false_alarm".to_string(), m.false_alarm),
        ("cost".to_string(), m.cost),
        ("precision".to_string(), m.precision),
        ("recall".to_string(), m.recall),
        ("f_score".to_string(), m.f_score),
    ];
    for c in &m.per_class {
        rows.push((format!("recall_{}", c.class), c.recall));
    }
    rows.push(("n_selected".to_string(), report.n_selected as f64));
    rows
}

/// Writes the CSV if requested and returns the human-readable table.
pub fn compare(a: CompareArgs) -> Result<String> {
    let load = |dir: &Path| -> Result<ReportDocument> {
        let path = dir.join(REPORT_FILE);
        if !path.exists() {
            return Err(CliError::runtime(format!(
                "run {} has no {REPORT_FILE}",
                dir.display()
            )));
        }
        read_json(&path, "report")
    };
    let ra = load(&a.run_a)?;
    let rb = load(&a.run_b)?;
    if ra.dataset_hash != rb.dataset_hash {
        return Err(CliError::runtime(format!(
            "runs were evaluated on different test sets ({} vs {})",
            &ra.dataset_hash[..12.min(ra.dataset_hash.len())],
            &rb.dataset_hash[..12.min(rb.dataset_hash.len())]
        )));
    }
    let rows: Vec<(String, f64, f64)> = comparison_rows(&ra)
        .into_iter()
        .zip(comparison_rows(&rb))
        .map(|((name, x), (_, y))| (name, x, y))
        .collect();

    if let Some(path) = &a.csv {
        let mut csv = format!(
            "# config_hash_a={}\n# config_hash_b={}\nmetric,run_a,run_b,delta\n",
            ra.config_hash, rb.config_hash
        );
        for (name, x, y) in &rows {
            csv.push_str(&format!("{name},{x},{y},{}\n", y - x));
        }
        std::fs::write(path, csv).map_err(|e| io(path, e))?;
    }

    let mut text = format!(
        "a: {} ({:?})\nb: {} ({:?})\n\n{:<16}{:>12}{:>12}{:>12}\n",
        a.run_a.display(),
        ra.variant,
        a.run_b.display(),
        rb.variant,
        "metric",
        "a",
        "b",
        "b - a"
    );
    for (name, x, y) in &rows {
        text.push_str(&format!("{name:<16}{x:>12.4}{y:>12.4}{:>12.4}\n", y - x));
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_parse() {
        assert_eq!(parse_targets("1, 2,3,4,5").unwrap(), [1, 2, 3, 4, 5]);
        assert!(parse_targets("1,2,3").is_err());
        assert!(parse_targets("1,2,3,4,x").is_err());
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let names: Vec<String> = Cli::command()
            .get_subcommands()
            .map(|c| c.get_name().to_string())
            .collect();
        assert_eq!(
            names,
            [
                "ingest",
                "select-features",
                "train",
                "classify",
                "evaluate",
                "pipeline",
                "compare"
            ]
        );
    }
}
