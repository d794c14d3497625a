use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use juri_core::api::PredictError;
use juri_core::corpus::{dedup_by_description, parse_corpus, write_corpus};
use juri_core::dataset::{prepare_dataset, DatasetCensus};
use juri_core::eval::{balance_target, cross_validate, reference_figures, undersample_to_balance};
use juri_core::labeler::build_labeled_dataset;
use juri_core::model::TrainConfig;
use juri_core::persist::{file_hash, load_model, save_model, save_report};
use juri_core::pipeline::{train_bundle, PipelineConfig};
use juri_core::synthetic::generate;
use juri_core::textproc::{parse_stem_rules, parse_stopwords, PreprocessConfig};
use juri_core::{Corpus, CorpusFormat, Dataset, EvaluationReport, LabelerRules, PredictResponse, Predictor, Task};
use serde::Serialize;

use crate::error::{CliError, ErrorKind};

fn parse_k(s: &str) -> Result<usize, String> {
    let k: usize = s.parse().map_err(|e| format!("{e}"))?;
    if k < 2 {
        return Err(format!("k must be at least 2, got {k}"));
    }
    Ok(k)
}

fn parse_noise(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(0.0..1.0).contains(&v) {
        return Err(format!("noise must lie in [0, 1), got {v}"));
    }
    Ok(v)
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Corpus file (JSON lines or CSV).
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "jsonl")]
    pub format: CorpusFormat,
    /// Labeling rules (TOML); the built-in rules when omitted.
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PreprocessArgs {
    /// Stop-word list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Suffix rules, `suffix<TAB>min_stem_length` per line.
    #[arg(long = "stem-rules")]
    pub stem_rules: Option<PathBuf>,
    #[arg(long = "min-df", default_value_t = 2)]
    pub min_df: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TrainingArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "learning-rate", default_value_t = 0.05)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long = "batch-size", default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long = "l2", default_value_t = 1e-4)]
    pub l2_lambda: f64,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Write the deduplicated corpus here, in the input format.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub task: Task,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Undersample the largest class to the size of the second largest.
    #[arg(long)]
    pub balance: bool,
    #[arg(long = "model-out")]
    pub model_out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub task: Task,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long, default_value = "5", value_parser = parse_k)]
    pub k: usize,
    #[arg(long)]
    pub balance: bool,
    /// Write the full report file here.
    #[arg(long = "report-out")]
    pub report_out: Option<PathBuf>,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long = "decision-model", required_unless_present = "server")]
    pub decision_model: Option<PathBuf>,
    #[arg(long = "unanimity-model", required_unless_present = "server")]
    pub unanimity_model: Option<PathBuf>,
    /// Ask a running service instead of loading model files.
    #[arg(long, conflicts_with_all = ["decision_model", "unanimity_model"])]
    pub server: Option<String>,
    /// Case description to classify.
    pub description: String,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long = "decision-model")]
    pub decision_model: PathBuf,
    #[arg(long = "unanimity-model")]
    pub unanimity_model: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Serve a static web client from this directory.
    #[arg(long = "static-dir")]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenSyntheticArgs {
    #[arg(long, default_value = "decision")]
    pub task: Task,
    #[arg(long = "n-per-class")]
    pub n_per_class: usize,
    #[arg(long, default_value = "0", value_parser = parse_noise)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "jsonl")]
    pub format: CorpusFormat,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn load_corpus(args: &CorpusArgs) -> Result<Corpus, CliError> {
    Ok(parse_corpus(read(&args.corpus)?.as_slice(), args.format)?)
}

pub fn load_rules(path: Option<&Path>) -> Result<LabelerRules, CliError> {
    match path {
        Some(p) => Ok(LabelerRules::from_toml(&read_text(p)?)?),
        None => Ok(LabelerRules::default()),
    }
}

pub fn pipeline_config(preprocess: &PreprocessArgs, training: &TrainingArgs) -> Result<PipelineConfig, CliError> {
    let defaults = PreprocessConfig::default();
    let stopwords = match &preprocess.stopwords {
        Some(p) => parse_stopwords(&read_text(p)?),
        None => defaults.stopwords,
    };
    let stem_rules = match &preprocess.stem_rules {
        Some(p) => parse_stem_rules(&read_text(p)?)?,
        None => defaults.stem_rules,
    };
    if preprocess.min_df == 0 {
        return Err(CliError::usage("min-df must be at least 1"));
    }
    let train = TrainConfig {
        learning_rate: training.learning_rate,
        epochs: training.epochs,
        batch_size: training.batch_size,
        l2_lambda: training.l2_lambda,
        seed: training.seed,
    };
    train.validate()?;
    Ok(PipelineConfig {
        preprocess: PreprocessConfig::new(stopwords, stem_rules, defaults.strip_accents, defaults.min_token_length)?,
        min_df: preprocess.min_df,
        train,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub loaded: usize,
    pub after_dedup: usize,
    pub unlabeled_decision: usize,
    pub unlabeled_unanimity: usize,
    pub decision_labels: BTreeMap<String, usize>,
    pub unanimity_labels: BTreeMap<String, usize>,
    pub decision_dataset: DatasetCensus,
    pub unanimity_dataset: DatasetCensus,
    pub labeler_ruleset_hash: String,
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<IngestReport, CliError> {
    let corpus = load_corpus(&args.corpus)?;
    let rules = load_rules(args.corpus.rules.as_deref())?;
    let deduped = dedup_by_description(corpus.clone());
    let (cases, exclusions) = build_labeled_dataset(&deduped, &rules);
    let mut decision_labels = BTreeMap::new();
    let mut unanimity_labels = BTreeMap::new();
    for case in &cases {
        if let Some(d) = case.decision {
            *decision_labels.entry(d.to_string()).or_insert(0) += 1;
        }
        if let Some(u) = case.unanimity {
            *unanimity_labels.entry(u.to_string()).or_insert(0) += 1;
        }
    }
    if let Some(out) = &args.out {
        let mut buf = Vec::new();
        write_corpus(&deduped.records, args.corpus.format, &mut buf)?;
        write(out, &buf)?;
    }
    let (_, decision_dataset) = prepare_dataset(corpus.clone(), &rules, Task::Decision);
    let (_, unanimity_dataset) = prepare_dataset(corpus, &rules, Task::Unanimity);
    Ok(IngestReport {
        loaded: deduped.census.loaded,
        after_dedup: deduped.len(),
        unlabeled_decision: exclusions.unlabeled_decision,
        unlabeled_unanimity: exclusions.unlabeled_unanimity,
        decision_labels,
        unanimity_labels,
        decision_dataset,
        unanimity_dataset,
        labeler_ruleset_hash: rules.hash(),
    })
}

pub struct PreparedDataset {
    pub dataset: Dataset,
    pub census: DatasetCensus,
    pub balance_target: Option<BTreeMap<String, usize>>,
    pub labeler_ruleset_hash: String,
}

/// Labeled dataset for `task`, undersampled when `balance` is set.
pub fn build_dataset(args: &CorpusArgs, task: Task, balance: bool, seed: u64) -> Result<PreparedDataset, CliError> {
    let rules = load_rules(args.rules.as_deref())?;
    let (dataset, census) = prepare_dataset(load_corpus(args)?, &rules, task);
    if dataset.is_empty() {
        return Err(CliError::new(ErrorKind::Data, "empty_dataset", format!("no {task} examples left after filtering")));
    }
    let labeler_ruleset_hash = rules.hash();
    if !balance {
        return Ok(PreparedDataset { dataset, census, balance_target: None, labeler_ruleset_hash });
    }
    let target = balance_target(&dataset.label_counts());
    let dataset = undersample_to_balance(&dataset, &target, seed)?;
    Ok(PreparedDataset { dataset, census, balance_target: Some(target), labeler_ruleset_hash })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub task: Task,
    pub model_out: PathBuf,
    pub file_hash: String,
    pub training_documents: usize,
    pub vocabulary_size: usize,
    pub classes: Vec<String>,
    pub label_census: BTreeMap<String, usize>,
    pub dataset_census: DatasetCensus,
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary, CliError> {
    let config = pipeline_config(&args.preprocess, &args.training)?;
    let PreparedDataset { dataset, census, labeler_ruleset_hash, .. } =
        build_dataset(&args.corpus, args.task, args.balance, args.training.seed)?;
    let bundle = train_bundle(&dataset, &config, &labeler_ruleset_hash)?;
    let bytes = save_model(&bundle);
    write(&args.model_out, &bytes)?;
    Ok(TrainSummary {
        task: args.task,
        model_out: args.model_out.clone(),
        file_hash: file_hash(&bytes),
        training_documents: dataset.len(),
        vocabulary_size: bundle.tfidf.dim(),
        classes: bundle.classifier.classes.clone(),
        label_census: dataset.label_counts(),
        dataset_census: census,
    })
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvaluationReport, CliError> {
    let config = pipeline_config(&args.preprocess, &args.training)?;
    let prepared = build_dataset(&args.corpus, args.task, args.balance, args.training.seed)?;
    let mut report = cross_validate(&prepared.dataset, &config, args.k, args.training.seed)?;
    report.dataset_census = Some(prepared.census);
    report.reference = Some(reference_figures(args.task, args.balance));
    report.balance_target = prepared.balance_target;
    if let Some(out) = &args.report_out {
        write(out, &save_report(&report))?;
    }
    Ok(report)
}

pub fn load_predictor(decision: &Path, unanimity: &Path) -> Result<Predictor, CliError> {
    let decision = load_model(&read(decision)?)?;
    let unanimity = load_model(&read(unanimity)?)?;
    Predictor::new(decision, unanimity).map_err(predict_error)
}

fn predict_error(e: PredictError) -> CliError {
    match e {
        PredictError::EmptyDescription => CliError::new(ErrorKind::Data, "empty_description", e.to_string()),
        PredictError::WrongTask { .. } => CliError::new(ErrorKind::Model, "model_task", e.to_string()),
        PredictError::Model(m) => m.into(),
    }
}

pub fn cmd_predict(args: &PredictArgs) -> Result<PredictResponse, CliError> {
    if let Some(server) = &args.server {
        return predict_remote(server, &args.description);
    }
    let (Some(d), Some(u)) = (&args.decision_model, &args.unanimity_model) else {
        return Err(CliError::usage("--decision-model and --unanimity-model are required without --server"));
    };
    load_predictor(d, u)?.predict(&args.description).map_err(predict_error)
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new(ErrorKind::Model, "runtime", e.to_string()))
}

fn predict_remote(server: &str, description: &str) -> Result<PredictResponse, CliError> {
    if description.trim().is_empty() {
        return Err(predict_error(PredictError::EmptyDescription));
    }
    let client = juri_client::Client::new(server);
    runtime()?.block_on(client.predict(description)).map_err(|e| match e {
        juri_client::ClientError::Api { status: 400, body } => CliError::new(ErrorKind::Data, &body.error, body.message),
        other => CliError::new(ErrorKind::Model, "service", other.to_string()),
    })
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let options = juri_server::ServeOptions {
        decision_model: args.decision_model.clone(),
        unanimity_model: args.unanimity_model.clone(),
        static_dir: args.static_dir.clone(),
    };
    let addr = format!("{}:{}", args.bind, args.port);
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::usage(format!("cannot bind {addr}: {e}")))?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        };
        juri_server::serve(listener, options, shutdown).await.map_err(|e| match e {
            juri_server::ServeError::Load(juri_server::LoadError::Io { .. }) => {
                CliError::new(ErrorKind::Data, "io", e.to_string())
            }
            other => CliError::new(ErrorKind::Model, "serve", other.to_string()),
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticSummary {
    pub out: PathBuf,
    pub records: usize,
    pub labels: BTreeMap<String, usize>,
}

pub fn cmd_gen_synthetic(args: &GenSyntheticArgs) -> Result<SyntheticSummary, CliError> {
    let records = generate(args.task, args.n_per_class, args.noise, args.seed)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let mut buf = Vec::new();
    write_corpus(&records, args.format, &mut buf)?;
    write(&args.out, &buf)?;
    let (dataset, _) = prepare_dataset(Corpus::new(records.clone()), &LabelerRules::default(), args.task);
    Ok(SyntheticSummary { out: args.out.clone(), records: records.len(), labels: dataset.label_counts() })
}
