use std::path::Path;

use juri_core::corpus::CorpusError;
use juri_core::eval::EvalError;
use juri_core::labeler::RuleError;
use juri_core::model::ModelError;
use juri_core::persist::PersistError;
use juri_core::pipeline::PipelineError;
use juri_core::textproc::TextError;
use serde::Serialize;

/// Exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Usage,
    Data,
    Model,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Data => 3,
            ErrorKind::Model => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("{code}: {message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, code: &str, message: impl Into<String>) -> Self {
        CliError { kind, code: code.to_string(), message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new(ErrorKind::Usage, "usage", message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::new(ErrorKind::Data, "io", format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// Single-line JSON for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": self.code,
            "kind": self.kind,
            "exit_code": self.exit_code(),
            "message": self.message,
        })
        .to_string()
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::new(ErrorKind::Data, "corpus", e.to_string())
    }
}

impl From<RuleError> for CliError {
    fn from(e: RuleError) -> Self {
        CliError::new(ErrorKind::Data, "rules", e.to_string())
    }
}

impl From<TextError> for CliError {
    fn from(e: TextError) -> Self {
        CliError::new(ErrorKind::Data, "preprocess", e.to_string())
    }
}

impl From<PersistError> for CliError {
    fn from(e: PersistError) -> Self {
        let code = match e {
            PersistError::BadFormat { .. } => "model_format",
            PersistError::VersionMismatch { .. } => "model_version",
            PersistError::Truncated(_) => "model_truncated",
            PersistError::Checksum => "model_checksum",
            PersistError::Payload(_) => "model_payload",
        };
        CliError::new(ErrorKind::Model, code, e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::SingleClass(_) | ModelError::EmptyTrainingSet => {
                CliError::new(ErrorKind::Data, "training_data", e.to_string())
            }
            ModelError::Config(_) => CliError::new(ErrorKind::Usage, "train_config", e.to_string()),
            _ => CliError::new(ErrorKind::Model, "training", e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Model(m) => m.into(),
            other => CliError::new(ErrorKind::Data, "training_data", other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidK(_) | EvalError::InvalidFraction(_) => CliError::usage(e.to_string()),
            EvalError::Pipeline(p) => p.into(),
            other => CliError::new(ErrorKind::Data, "evaluation_data", other.to_string()),
        }
    }
}
