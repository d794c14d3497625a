//! Request and response bodies shared by the CLI, the HTTP service and its client.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Task;
use crate::model::{ModelError, TrainConfig};
use crate::pipeline::{BundlePrediction, ModelBundle};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PredictError {
    #[error("empty description")]
    EmptyDescription,
    #[error("model file holds a {found} model where a {expected} model is required")]
    WrongTask { expected: Task, found: Task },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub decision_label: String,
    pub decision_scores: BTreeMap<String, f64>,
    pub unanimity_label: String,
    pub unanimity_scores: BTreeMap<String, f64>,
    pub preprocessed_token_count: usize,
    /// True when no token of the description is known to either model.
    pub oov_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub decision_model_hash: Option<String>,
    pub unanimity_model_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub task: Task,
    pub labels: Vec<String>,
    pub vocabulary_size: usize,
    pub training_documents: usize,
    pub train_config: TrainConfig,
    pub min_df: usize,
    pub file_hash: String,
    pub labeler_ruleset_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfoResponse {
    pub decision: ModelInfo,
    pub unanimity: ModelInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl ModelInfo {
    pub fn describe(bundle: &ModelBundle, file_hash: &str) -> Self {
        ModelInfo {
            task: bundle.task,
            labels: bundle.classifier.classes.clone(),
            vocabulary_size: bundle.tfidf.dim(),
            training_documents: bundle.tfidf.vocabulary.n_documents(),
            train_config: bundle.train_config,
            min_df: bundle.tfidf.min_df,
            file_hash: file_hash.to_string(),
            labeler_ruleset_hash: bundle.labeler_ruleset_hash.clone(),
        }
    }
}

/// A description with no known term carries no evidence, so its scores are
/// uniform rather than the softmax of the bias alone; the first class wins.
fn uniform_when_unknown(bundle: &ModelBundle, mut p: BundlePrediction) -> BundlePrediction {
    if p.zero_vector {
        let n = p.prediction.scores.len();
        p.prediction.scores = vec![1.0 / n as f64; n];
        p.prediction.label_index = 0;
        p.prediction.label = bundle.classifier.classes[0].clone();
    }
    p
}

/// The decision and unanimity models served together.
#[derive(Debug, Clone)]
pub struct Predictor {
    decision: ModelBundle,
    unanimity: ModelBundle,
}

impl Predictor {
    pub fn new(decision: ModelBundle, unanimity: ModelBundle) -> Result<Self, PredictError> {
        for (bundle, expected) in [(&decision, Task::Decision), (&unanimity, Task::Unanimity)] {
            if bundle.task != expected {
                return Err(PredictError::WrongTask { expected, found: bundle.task });
            }
        }
        Ok(Predictor { decision, unanimity })
    }

    pub fn decision(&self) -> &ModelBundle {
        &self.decision
    }

    pub fn unanimity(&self) -> &ModelBundle {
        &self.unanimity
    }

    pub fn predict(&self, description: &str) -> Result<PredictResponse, PredictError> {
        if description.trim().is_empty() {
            return Err(PredictError::EmptyDescription);
        }
        let decision = uniform_when_unknown(&self.decision, self.decision.predict_text(description)?);
        let unanimity = uniform_when_unknown(&self.unanimity, self.unanimity.predict_text(description)?);
        let scores = |bundle: &ModelBundle, values: &[f64]| -> BTreeMap<String, f64> {
            bundle.classifier.classes.iter().cloned().zip(values.iter().copied()).collect()
        };
        Ok(PredictResponse {
            decision_scores: scores(&self.decision, &decision.prediction.scores),
            decision_label: decision.prediction.label,
            unanimity_scores: scores(&self.unanimity, &unanimity.prediction.scores),
            unanimity_label: unanimity.prediction.label,
            preprocessed_token_count: decision.token_count,
            oov_flag: decision.zero_vector && unanimity.zero_vector,
        })
    }
}
