//! Court decision outcome prediction.
//!
//! The pipeline ingests decision records ([`corpus`]), derives outcome and
//! unanimity labels by rule ([`labeler`]), preprocesses case descriptions
//! ([`textproc`]), vectorizes them with TF-IDF ([`features`]), trains softmax
//! regression classifiers ([`model`]) and evaluates them with stratified
//! cross-validation ([`eval`]).

pub mod api;
pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod labeler;
pub mod model;
pub mod persist;
pub mod pipeline;
pub mod synthetic;
pub mod textproc;

pub use api::{PredictRequest, PredictResponse, Predictor};
pub use corpus::{Corpus, CorpusFormat, RawDecision};
pub use dataset::{Dataset, Example, Task};
pub use eval::EvaluationReport;
pub use labeler::{DecisionLabel, LabelerRules, UnanimityLabel};
pub use pipeline::{ModelBundle, PipelineConfig};
