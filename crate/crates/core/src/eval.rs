//! Stratified cross-validation, F1 scoring, holdout splits and undersampling.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{label_counts, Dataset, DatasetCensus, Task};
use crate::model::TrainConfig;
use crate::pipeline::{train_on_tokens, ModelBundle, PipelineConfig, PipelineError};
use crate::textproc::Preprocessor;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("class '{class}' has {count} samples, fewer than k = {k}")]
    ClassTooSmall { class: String, count: usize, k: usize },
    #[error("cannot keep {target} '{label}' samples, only {available} available")]
    TargetExceeds { label: String, target: usize, available: usize },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("class '{0}' is too small to appear in both train and test splits")]
    DegenerateSplit(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }
}

/// Shuffles each class with the seeded generator, then deals its samples
/// round-robin across folds. The dealing position carries over between
/// classes so total fold sizes also stay within one of each other.
pub fn stratified_kfold<S: AsRef<str>>(labels: &[S], k: usize, seed: u64) -> Result<FoldAssignment, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidK(k));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.as_ref()).or_default().push(i);
    }
    if let Some((class, members)) = by_class.iter().find(|(_, m)| m.len() < k) {
        return Err(EvalError::ClassTooSmall { class: class.to_string(), count: members.len(), k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let n = classes.len();
        ConfusionMatrix { classes, counts: vec![vec![0; n]; n] }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        let classes = (0..counts.len()).map(|i| i.to_string()).collect();
        ConfusionMatrix { classes, counts }
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    /// `2PR / (P + R)`, zero when precision and recall are both zero or undefined.
    pub fn class_f1(&self, class: usize) -> f64 {
        let tp = self.counts[class][class] as f64;
        let predicted = self.predicted(class) as f64;
        let support = self.support(class) as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if support > 0.0 { tp / support } else { 0.0 };
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }

    pub fn accuracy(&self) -> f64 {
        let correct: u64 = (0..self.counts.len()).map(|c| self.counts[c][c]).sum();
        correct as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Weighted,
    Macro,
}

pub fn f1_score(cm: &ConfusionMatrix, averaging: Averaging) -> f64 {
    let n = cm.counts.len();
    if n == 0 || cm.total() == 0 {
        return 0.0;
    }
    match averaging {
        Averaging::Macro => (0..n).map(|c| cm.class_f1(c)).sum::<f64>() / n as f64,
        Averaging::Weighted => {
            let total = cm.total() as f64;
            (0..n).map(|c| cm.class_f1(c) * cm.support(c) as f64).sum::<f64>() / total
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance (divides by n).
pub fn population_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Headline figures published for the original (private) court corpus. They
/// are carried in reports for orientation only and are not reproducible here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFigures {
    pub mean_f1: f64,
    pub variance: f64,
}

pub fn reference_figures(task: Task, balanced: bool) -> ReferenceFigures {
    let (mean_f1, variance) = match (task, balanced) {
        (Task::Decision, false) => (0.7899, 0.000017),
        (Task::Decision, true) => (0.7407, 0.00029),
        (Task::Unanimity, false) => (0.9846, 0.000031),
        (Task::Unanimity, true) => (0.7694, 0.015),
    };
    ReferenceFigures { mean_f1, variance }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub min_df: usize,
    pub train: TrainConfig,
    pub strip_accents: bool,
    pub min_token_length: usize,
    pub n_stopwords: usize,
    pub stopwords_hash: String,
    pub n_stem_rules: usize,
    pub stem_rules_hash: String,
}

impl From<&PipelineConfig> for ConfigSnapshot {
    fn from(c: &PipelineConfig) -> Self {
        ConfigSnapshot {
            min_df: c.min_df,
            train: c.train,
            strip_accents: c.preprocess.strip_accents,
            min_token_length: c.preprocess.min_token_length,
            n_stopwords: c.preprocess.stopwords.len(),
            stopwords_hash: c.preprocess.stopwords_hash(),
            n_stem_rules: c.preprocess.stem_rules.len(),
            stem_rules_hash: c.preprocess.stem_rules_hash(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub task: Task,
    pub k: usize,
    pub seed: u64,
    pub classes: Vec<String>,
    /// Weighted F1 per fold; the headline metric.
    pub per_fold_f1: Vec<f64>,
    pub mean_f1: f64,
    /// Population variance of `per_fold_f1`.
    pub variance: f64,
    pub per_fold_macro_f1: Vec<f64>,
    pub mean_macro_f1: f64,
    pub variance_macro: f64,
    pub per_fold_vocabulary_size: Vec<usize>,
    pub confusion_matrices: Vec<ConfusionMatrix>,
    /// Label counts of the evaluated dataset.
    pub label_census: BTreeMap<String, usize>,
    pub dataset_census: Option<DatasetCensus>,
    pub balance_target: Option<BTreeMap<String, usize>>,
    pub config: ConfigSnapshot,
    pub reference: Option<ReferenceFigures>,
}

impl EvaluationReport {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "task: {}  k: {}  seed: {}", self.task, self.k, self.seed);
        let census: Vec<String> = self.label_census.iter().map(|(l, n)| format!("{l}={n}")).collect();
        let _ = writeln!(out, "labels: {}", census.join(" "));
        let _ = writeln!(out, "{:<6} {:>12} {:>12} {:>8}", "fold", "weighted_f1", "macro_f1", "vocab");
        for f in 0..self.per_fold_f1.len() {
            let _ = writeln!(
                out,
                "{:<6} {:>12.4} {:>12.4} {:>8}",
                f, self.per_fold_f1[f], self.per_fold_macro_f1[f], self.per_fold_vocabulary_size[f]
            );
        }
        let _ = writeln!(out, "{:<6} {:>12.4} {:>12.4}", "mean", self.mean_f1, self.mean_macro_f1);
        let _ = writeln!(out, "{:<6} {:>12.6} {:>12.6}", "var", self.variance, self.variance_macro);
        if let Some(r) = self.reference {
            let _ = writeln!(
                out,
                "reference (original corpus, not comparable): f1={:.4} var={}",
                r.mean_f1, r.variance
            );
        }
        out
    }
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_table())
    }
}

/// Per-fold bundles alongside the report, for inspection.
pub struct CrossValidation {
    pub report: EvaluationReport,
    pub folds: FoldAssignment,
    pub models: Vec<ModelBundle>,
}

pub fn cross_validate(
    dataset: &Dataset,
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<EvaluationReport, EvalError> {
    cross_validate_with_models(dataset, config, k, seed).map(|cv| cv.report)
}

/// Every fold fits its own vectorizer and classifier on the other `k - 1`
/// folds; the held-out fold is only transformed and scored.
pub fn cross_validate_with_models(
    dataset: &Dataset,
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<CrossValidation, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let labels = dataset.labels();
    let folds = stratified_kfold(&labels, k, seed)?;
    let preprocessor = Preprocessor::new(config.preprocess.clone());
    let docs: Vec<Vec<String>> = dataset.examples.iter().map(|e| preprocessor.process(&e.text)).collect();
    let classes = crate::model::class_list(&labels);

    let results: Vec<Result<(ModelBundle, ConfusionMatrix), EvalError>> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let train_idx = folds.train_indices(fold);
            let train_docs: Vec<Vec<String>> = train_idx.iter().map(|&i| docs[i].clone()).collect();
            let train_labels: Vec<&str> = train_idx.iter().map(|&i| labels[i]).collect();
            let bundle = train_on_tokens(dataset.task, &train_docs, &train_labels, config, "")?;
            let mut cm = ConfusionMatrix::new(classes.clone());
            for i in folds.test_indices(fold) {
                let x = bundle.tfidf.transform(&docs[i]);
                let p = bundle.classifier.predict(&x).map_err(PipelineError::from)?;
                let truth = classes.iter().position(|c| c == labels[i]).expect("known class");
                let predicted = classes.iter().position(|c| *c == p.label).expect("known class");
                cm.add(truth, predicted);
            }
            Ok((bundle, cm))
        })
        .collect();

    let mut models = Vec::with_capacity(k);
    let mut matrices = Vec::with_capacity(k);
    for r in results {
        let (bundle, cm) = r?;
        models.push(bundle);
        matrices.push(cm);
    }
    let per_fold_f1: Vec<f64> = matrices.iter().map(|cm| f1_score(cm, Averaging::Weighted)).collect();
    let per_fold_macro_f1: Vec<f64> = matrices.iter().map(|cm| f1_score(cm, Averaging::Macro)).collect();
    let report = EvaluationReport {
        task: dataset.task,
        k,
        seed,
        classes,
        mean_f1: mean(&per_fold_f1),
        variance: population_variance(&per_fold_f1),
        mean_macro_f1: mean(&per_fold_macro_f1),
        variance_macro: population_variance(&per_fold_macro_f1),
        per_fold_f1,
        per_fold_macro_f1,
        per_fold_vocabulary_size: models.iter().map(|m| m.tfidf.dim()).collect(),
        confusion_matrices: matrices,
        label_census: dataset.label_counts(),
        dataset_census: None,
        balance_target: None,
        config: ConfigSnapshot::from(config),
        reference: None,
    };
    Ok(CrossValidation { report, folds, models })
}

/// Reduces the largest class to the size of the second largest.
pub fn balance_target(counts: &BTreeMap<String, usize>) -> BTreeMap<String, usize> {
    let mut ranked: Vec<(&String, &usize)> = counts.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    match ranked.as_slice() {
        [(largest, _), (_, second), ..] => BTreeMap::from([((*largest).clone(), **second)]),
        _ => BTreeMap::new(),
    }
}

/// Keeps a seeded uniform sample of `target[label]` examples for each targeted
/// label; other labels are untouched and input order is preserved.
pub fn undersample_to_balance(
    dataset: &Dataset,
    target: &BTreeMap<String, usize>,
    seed: u64,
) -> Result<Dataset, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![true; dataset.len()];
    for (label, &wanted) in target {
        let members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.examples[i].label == *label).collect();
        if wanted > members.len() {
            return Err(EvalError::TargetExceeds { label: label.clone(), target: wanted, available: members.len() });
        }
        for &i in &members {
            keep[i] = false;
        }
        for chosen in index::sample(&mut rng, members.len(), wanted) {
            keep[members[chosen]] = true;
        }
    }
    let indices: Vec<usize> = (0..dataset.len()).filter(|&i| keep[i]).collect();
    Ok(dataset.subset(&indices))
}

/// Per-class train sizes: floor of `fraction * n_c`, then the remaining
/// `round(fraction * N) - sum(floors)` samples go one each to the classes with
/// the largest fractional parts (ties to the earlier class in label order).
pub fn stratified_train_sizes(counts: &BTreeMap<String, usize>, fraction: f64) -> BTreeMap<String, usize> {
    let total: usize = counts.values().sum();
    let target = (fraction * total as f64).round() as usize;
    let mut sizes: BTreeMap<String, usize> = BTreeMap::new();
    let mut remainders: Vec<(f64, &String)> = Vec::new();
    for (label, &n) in counts {
        let exact = fraction * n as f64;
        sizes.insert(label.clone(), exact.floor() as usize);
        remainders.push((exact - exact.floor(), label));
    }
    let assigned: usize = sizes.values().sum();
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    for (_, label) in remainders.into_iter().take(target.saturating_sub(assigned)) {
        *sizes.get_mut(label).expect("label present") += 1;
    }
    sizes
}

pub fn holdout_split(
    dataset: &Dataset,
    train_fraction: f64,
    stratified: bool,
    seed: u64,
) -> Result<(Dataset, Dataset), EvalError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(train_fraction));
    }
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; dataset.len()];
    if stratified {
        let counts = dataset.label_counts();
        let sizes = stratified_train_sizes(&counts, train_fraction);
        for (label, &n_train) in &sizes {
            if n_train == 0 || n_train == counts[label] {
                return Err(EvalError::DegenerateSplit(label.clone()));
            }
            let mut members: Vec<usize> =
                (0..dataset.len()).filter(|&i| dataset.examples[i].label == *label).collect();
            members.shuffle(&mut rng);
            for &i in &members[..n_train] {
                in_train[i] = true;
            }
        }
    } else {
        let n_train = (train_fraction * dataset.len() as f64).round() as usize;
        if n_train == 0 || n_train == dataset.len() {
            return Err(EvalError::DegenerateSplit("*".into()));
        }
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut rng);
        for &i in &order[..n_train] {
            in_train[i] = true;
        }
    }
    let train: Vec<usize> = (0..dataset.len()).filter(|&i| in_train[i]).collect();
    let test: Vec<usize> = (0..dataset.len()).filter(|&i| !in_train[i]).collect();
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Label counts helper for callers holding plain label slices.
pub fn census_of<S: AsRef<str>>(labels: &[S]) -> BTreeMap<String, usize> {
    label_counts(labels.iter().map(|l| l.as_ref()))
}
