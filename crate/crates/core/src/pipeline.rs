//! Text → tokens → TF-IDF → classifier, trained and applied as one unit.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Task};
use crate::features::{FeatureError, FeatureVector, TfidfModel};
use crate::model::{train, LinearClassifier, ModelError, Prediction, TrainConfig};
use crate::textproc::{PreprocessConfig, Preprocessor};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub min_df: usize,
    pub train: TrainConfig,
}

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        PipelineConfig {
            preprocess: PreprocessConfig::default(),
            min_df: 2,
            train: TrainConfig::with_seed(seed),
        }
    }
}

/// Everything needed to turn a case description into a prediction.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub task: Task,
    pub tfidf: TfidfModel,
    pub classifier: LinearClassifier,
    pub train_config: TrainConfig,
    pub labeler_ruleset_hash: String,
    preprocessor: Preprocessor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundlePrediction {
    pub prediction: Prediction,
    pub token_count: usize,
    /// No token of the description is in the vocabulary.
    pub zero_vector: bool,
}

impl ModelBundle {
    pub fn new(
        task: Task,
        preprocess: PreprocessConfig,
        tfidf: TfidfModel,
        classifier: LinearClassifier,
        train_config: TrainConfig,
        labeler_ruleset_hash: String,
    ) -> Self {
        ModelBundle {
            task,
            tfidf,
            classifier,
            train_config,
            labeler_ruleset_hash,
            preprocessor: Preprocessor::new(preprocess),
        }
    }

    pub fn preprocess_config(&self) -> &PreprocessConfig {
        self.preprocessor.config()
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        self.preprocessor.process(text)
    }

    pub fn features(&self, text: &str) -> (Vec<String>, FeatureVector) {
        let tokens = self.tokens(text);
        let x = self.tfidf.transform(&tokens);
        (tokens, x)
    }

    pub fn predict_text(&self, text: &str) -> Result<BundlePrediction, ModelError> {
        let (tokens, x) = self.features(text);
        let prediction = self.classifier.predict(&x)?;
        Ok(BundlePrediction { prediction, token_count: tokens.len(), zero_vector: x.is_zero() })
    }
}

/// Fits the vectorizer and trains the classifier on `dataset` only.
pub fn train_bundle(
    dataset: &Dataset,
    config: &PipelineConfig,
    labeler_ruleset_hash: &str,
) -> Result<ModelBundle, PipelineError> {
    if dataset.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let preprocessor = Preprocessor::new(config.preprocess.clone());
    let docs: Vec<Vec<String>> = dataset.examples.iter().map(|e| preprocessor.process(&e.text)).collect();
    train_on_tokens(dataset.task, &docs, &dataset.labels(), config, labeler_ruleset_hash)
}

pub(crate) fn train_on_tokens(
    task: Task,
    docs: &[Vec<String>],
    labels: &[&str],
    config: &PipelineConfig,
    labeler_ruleset_hash: &str,
) -> Result<ModelBundle, PipelineError> {
    let tfidf = TfidfModel::fit(docs, config.min_df)?;
    let x: Vec<FeatureVector> = docs.iter().map(|d| tfidf.transform(d)).collect();
    let classifier = train(&x, labels, tfidf.dim(), &config.train)?;
    Ok(ModelBundle::new(
        task,
        config.preprocess.clone(),
        tfidf,
        classifier,
        config.train,
        labeler_ruleset_hash.to_string(),
    ))
}
