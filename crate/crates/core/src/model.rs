//! Softmax regression over sparse features, trained by mini-batch SGD.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("training needs at least two distinct labels, found {0}")]
    SingleClass(usize),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("feature index {index} out of range for {n_features} features")]
    DimensionOverflow { index: usize, n_features: usize },
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid training config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_lambda: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        TrainConfig { learning_rate: 0.05, epochs: 30, batch_size: 32, l2_lambda: 1e-4, seed }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch_size must be positive".into()));
        }
        if !(self.l2_lambda.is_finite() && self.l2_lambda >= 0.0) {
            return Err(ModelError::Config("l2_lambda must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Row-major `n_classes x (n_features + 1)` matrix; the last column is the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub n_classes: usize,
    pub n_features: usize,
    pub data: Vec<f64>,
}

impl Weights {
    pub fn zeros(n_classes: usize, n_features: usize) -> Self {
        Weights { n_classes, n_features, data: vec![0.0; n_classes * (n_features + 1)] }
    }

    pub fn stride(&self) -> usize {
        self.n_features + 1
    }

    pub fn row(&self, class: usize) -> &[f64] {
        let s = self.stride();
        &self.data[class * s..(class + 1) * s]
    }

    pub fn get(&self, class: usize, col: usize) -> f64 {
        self.data[class * self.stride() + col]
    }

    pub fn bias(&self, class: usize) -> f64 {
        self.get(class, self.n_features)
    }

    fn check_vector(&self, x: &FeatureVector) -> Result<(), ModelError> {
        match x.entries.iter().find(|(i, _)| *i >= self.n_features) {
            Some(&(index, _)) => Err(ModelError::DimensionOverflow { index, n_features: self.n_features }),
            None => Ok(()),
        }
    }

    /// `W x + b` for every class.
    pub fn logits(&self, x: &FeatureVector) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| {
                let row = self.row(c);
                x.entries.iter().fold(row[self.n_features], |acc, &(i, v)| acc + row[i] * v)
            })
            .collect()
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Mean cross-entropy plus `lambda / 2 * ||W||^2` (bias excluded), and its gradient.
pub fn loss_and_gradient(
    weights: &Weights,
    x: &[FeatureVector],
    y: &[usize],
    l2_lambda: f64,
) -> Result<(f64, Weights), ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::Shape(format!("{} samples but {} labels", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if weights.data.len() != weights.n_classes * weights.stride() {
        return Err(ModelError::Shape("weight buffer does not match its dimensions".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= weights.n_classes) {
        return Err(ModelError::Shape(format!("label index {bad} but only {} classes", weights.n_classes)));
    }
    for xi in x {
        weights.check_vector(xi)?;
    }

    let n = x.len() as f64;
    let stride = weights.stride();
    let bias_col = weights.n_features;
    let mut grad = Weights::zeros(weights.n_classes, weights.n_features);
    let mut loss = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let logits = weights.logits(xi);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - logits[yi];
        for (c, z) in logits.iter().enumerate() {
            let residual = (z - log_sum).exp() - if c == yi { 1.0 } else { 0.0 };
            let row = &mut grad.data[c * stride..(c + 1) * stride];
            for &(i, v) in &xi.entries {
                row[i] += residual * v / n;
            }
            row[bias_col] += residual / n;
        }
    }
    loss /= n;

    if l2_lambda > 0.0 {
        let mut penalty = 0.0;
        for c in 0..weights.n_classes {
            for j in 0..weights.n_features {
                let w = weights.data[c * stride + j];
                penalty += w * w;
                grad.data[c * stride + j] += l2_lambda * w;
            }
        }
        loss += 0.5 * l2_lambda * penalty;
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    /// Class names in index order.
    pub classes: Vec<String>,
    pub weights: Weights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub label_index: usize,
    /// Probability per class, in the classifier's class order.
    pub scores: Vec<f64>,
}

impl LinearClassifier {
    pub fn zeros(classes: Vec<String>, n_features: usize) -> Self {
        let weights = Weights::zeros(classes.len(), n_features);
        LinearClassifier { classes, weights }
    }

    pub fn n_features(&self) -> usize {
        self.weights.n_features
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction, ModelError> {
        self.weights.check_vector(x)?;
        let scores = softmax(&self.weights.logits(x));
        let label_index = argmax(&scores);
        Ok(Prediction { label: self.classes[label_index].clone(), label_index, scores })
    }
}

pub fn predict(model: &LinearClassifier, x: &FeatureVector) -> Result<Prediction, ModelError> {
    model.predict(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LinearClassifier,
    /// Full-data objective after each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Class list in sorted order, so class indices never depend on sample order.
pub fn class_list<S: AsRef<str>>(labels: &[S]) -> Vec<String> {
    labels
        .iter()
        .map(|l| l.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn train<S: AsRef<str>>(
    x: &[FeatureVector],
    y: &[S],
    n_features: usize,
    config: &TrainConfig,
) -> Result<LinearClassifier, ModelError> {
    train_with_trace(x, y, n_features, config).map(|o| o.model)
}

/// Zero-initialized SGD with a seeded per-epoch shuffle and constant step size.
pub fn train_with_trace<S: AsRef<str>>(
    x: &[FeatureVector],
    y: &[S],
    n_features: usize,
    config: &TrainConfig,
) -> Result<TrainOutcome, ModelError> {
    config.validate()?;
    if x.len() != y.len() {
        return Err(ModelError::Shape(format!("{} samples but {} labels", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let classes = class_list(y);
    if classes.len() < 2 {
        return Err(ModelError::SingleClass(classes.len()));
    }
    let targets: Vec<usize> = y
        .iter()
        .map(|l| classes.iter().position(|c| c == l.as_ref()).expect("label in class list"))
        .collect();

    let mut model = LinearClassifier::zeros(classes, n_features);
    for xi in x {
        model.weights.check_vector(xi)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut batch_x = Vec::with_capacity(config.batch_size);
    let mut batch_y = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.push(x[i].clone());
                batch_y.push(targets[i]);
            }
            let (_, grad) = loss_and_gradient(&model.weights, &batch_x, &batch_y, config.l2_lambda)?;
            for (w, g) in model.weights.data.iter_mut().zip(&grad.data) {
                *w -= config.learning_rate * g;
            }
        }
        let (loss, _) = loss_and_gradient(&model.weights, x, &targets, config.l2_lambda)?;
        if !loss.is_finite() || model.weights.data.iter().any(|w| !w.is_finite()) {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        epoch_losses.push(loss);
    }
    Ok(TrainOutcome { model, epoch_losses })
}
