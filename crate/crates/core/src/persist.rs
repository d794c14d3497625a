//! Versioned, checksummed model and report files.
//!
//! Every file is a one-line header followed by a compact JSON payload:
//!
//! ```text
//! <tag> <version> <payload-length> sha256:<hex digest of payload>\n
//! {...payload...}
//! ```
//!
//! Model files use the tag `jurimodel`, evaluation reports `jurireport`. Floating-point arrays (idf and the
//! row-major weight matrix) are stored as base64 of little-endian IEEE-754
//! doubles so a load reproduces every bit.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Task;
use crate::eval::EvaluationReport;
use crate::features::{TfidfModel, Vocabulary};
use crate::labeler::hex;
use crate::model::{LinearClassifier, TrainConfig, Weights};
use crate::pipeline::ModelBundle;
use crate::textproc::PreprocessConfig;

pub const MODEL_TAG: &str = "jurimodel";
pub const MODEL_VERSION: u32 = 1;
pub const REPORT_TAG: &str = "jurireport";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PersistError {
    #[error("not a {expected} file: {reason}")]
    BadFormat { expected: &'static str, reason: String },
    #[error("unsupported file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("file truncated: {0}")]
    Truncated(String),
    #[error("checksum mismatch: file is corrupted")]
    Checksum,
    #[error("invalid payload: {0}")]
    Payload(String),
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn write_document<T: Serialize>(tag: &str, version: u32, payload: &T) -> Vec<u8> {
    let body = serde_json::to_vec(payload).expect("payload serializes");
    let mut out = format!("{tag} {version} {} sha256:{}\n", body.len(), sha256_hex(&body)).into_bytes();
    out.extend_from_slice(&body);
    out
}

pub fn read_document<T: DeserializeOwned>(
    tag: &'static str,
    expected_version: u32,
    bytes: &[u8],
) -> Result<T, PersistError> {
    let bad = |reason: &str| PersistError::BadFormat { expected: tag, reason: reason.to_string() };
    let newline = match bytes.iter().position(|&b| b == b'\n') {
        Some(p) => p,
        None if !bytes.is_empty() && (bytes.starts_with(tag.as_bytes()) || tag.as_bytes().starts_with(bytes)) => {
            return Err(PersistError::Truncated("header line incomplete".into()))
        }
        None => return Err(bad("missing header line")),
    };
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| bad("header is not UTF-8"))?;
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.first() != Some(&tag) {
        return Err(bad("unexpected format tag"));
    }
    if fields.len() != 4 {
        return Err(bad("malformed header"));
    }
    let version: u32 = fields[1].parse().map_err(|_| bad("version is not an integer"))?;
    if version != expected_version {
        return Err(PersistError::VersionMismatch { found: version, expected: expected_version });
    }
    let expected_len: usize = fields[2].parse().map_err(|_| bad("payload length is not an integer"))?;
    let digest = fields[3].strip_prefix("sha256:").ok_or_else(|| bad("missing sha256 checksum"))?;
    let body = &bytes[newline + 1..];
    if body.len() < expected_len {
        return Err(PersistError::Truncated(format!("payload has {} of {expected_len} bytes", body.len())));
    }
    if body.len() != expected_len || sha256_hex(body) != digest {
        return Err(PersistError::Checksum);
    }
    serde_json::from_slice(body).map_err(|e| PersistError::Payload(e.to_string()))
}

fn encode_f64s(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode_f64s(text: &str, expected: usize, what: &str) -> Result<Vec<f64>, PersistError> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| PersistError::Payload(format!("{what}: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(PersistError::Payload(format!(
            "{what}: expected {expected} values, found {} bytes",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(PersistError::Payload(format!("{what}: non-finite value")));
    }
    Ok(values)
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelPayload {
    format: String,
    version: u32,
    task: Task,
    preprocess: PreprocessConfig,
    stopwords_hash: String,
    stem_rules_hash: String,
    labeler_ruleset_hash: String,
    min_df: usize,
    n_documents: usize,
    vocabulary: Vec<String>,
    document_frequency: Vec<usize>,
    idf: String,
    classes: Vec<String>,
    n_features: usize,
    weights: String,
    train_config: TrainConfig,
}

pub fn save_model(bundle: &ModelBundle) -> Vec<u8> {
    let preprocess = bundle.preprocess_config().clone();
    let vocab = &bundle.tfidf.vocabulary;
    let payload = ModelPayload {
        format: MODEL_TAG.to_string(),
        version: MODEL_VERSION,
        task: bundle.task,
        stopwords_hash: preprocess.stopwords_hash(),
        stem_rules_hash: preprocess.stem_rules_hash(),
        preprocess,
        labeler_ruleset_hash: bundle.labeler_ruleset_hash.clone(),
        min_df: bundle.tfidf.min_df,
        n_documents: vocab.n_documents(),
        vocabulary: vocab.terms().to_vec(),
        document_frequency: vocab.document_frequency().to_vec(),
        idf: encode_f64s(&bundle.tfidf.idf),
        classes: bundle.classifier.classes.clone(),
        n_features: bundle.classifier.n_features(),
        weights: encode_f64s(&bundle.classifier.weights.data),
        train_config: bundle.train_config,
    };
    write_document(MODEL_TAG, MODEL_VERSION, &payload)
}

pub fn load_model(bytes: &[u8]) -> Result<ModelBundle, PersistError> {
    let p: ModelPayload = read_document(MODEL_TAG, MODEL_VERSION, bytes)?;
    let invalid = |m: &str| Err(PersistError::Payload(m.to_string()));
    if p.format != MODEL_TAG || p.version != MODEL_VERSION {
        return invalid("payload format/version disagree with header");
    }
    if p.preprocess.stopwords_hash() != p.stopwords_hash {
        return invalid("stop-list hash mismatch");
    }
    if p.preprocess.stem_rules_hash() != p.stem_rules_hash {
        return invalid("stem-rule hash mismatch");
    }
    if p.preprocess.min_token_length == 0 {
        return invalid("min_token_length must be at least 1");
    }
    let v = p.vocabulary.len();
    if p.document_frequency.len() != v || p.n_features != v {
        return invalid("vocabulary, document frequencies and feature count disagree");
    }
    if p.classes.len() < 2 {
        return invalid("classifier needs at least two classes");
    }
    let idf = decode_f64s(&p.idf, v, "idf")?;
    let data = decode_f64s(&p.weights, p.classes.len() * (v + 1), "weights")?;
    let tfidf = TfidfModel {
        vocabulary: Vocabulary::from_parts(p.vocabulary, p.document_frequency, p.n_documents),
        idf,
        min_df: p.min_df,
    };
    let classifier = LinearClassifier {
        weights: Weights { n_classes: p.classes.len(), n_features: v, data },
        classes: p.classes,
    };
    Ok(ModelBundle::new(p.task, p.preprocess, tfidf, classifier, p.train_config, p.labeler_ruleset_hash))
}

/// Evaluation reports share the model file layout under their own tag.
pub fn save_report(report: &EvaluationReport) -> Vec<u8> {
    write_document(REPORT_TAG, REPORT_VERSION, report)
}

pub fn load_report(bytes: &[u8]) -> Result<EvaluationReport, PersistError> {
    read_document(REPORT_TAG, REPORT_VERSION, bytes)
}

/// Hex SHA-256 of a whole file, used to identify loaded models.
pub fn file_hash(bytes: &[u8]) -> String {
    sha256_hex(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Doc {
        a: u32,
    }

    #[test]
    fn document_round_trip() {
        let bytes = write_document("jurireport", 1, &Doc { a: 7 });
        assert!(bytes.starts_with(b"jurireport 1 7 sha256:"));
        assert_eq!(read_document::<Doc>("jurireport", 1, &bytes).unwrap(), Doc { a: 7 });
    }

    #[test]
    fn document_errors() {
        let bytes = write_document("jurimodel", 1, &Doc { a: 7 });
        assert!(matches!(
            read_document::<Doc>("jurireport", 1, &bytes),
            Err(PersistError::BadFormat { .. })
        ));
        assert_eq!(
            read_document::<Doc>("jurimodel", 2, &bytes),
            Err(PersistError::VersionMismatch { found: 1, expected: 2 })
        );
        let cut = &bytes[..bytes.len() - 2];
        assert!(matches!(read_document::<Doc>("jurimodel", 1, cut), Err(PersistError::Truncated(_))));
        let mut flipped = bytes.clone();
        let last = flipped.len() - 2;
        flipped[last] = b'8';
        assert_eq!(read_document::<Doc>("jurimodel", 1, &flipped), Err(PersistError::Checksum));
        assert!(matches!(read_document::<Doc>("jurimodel", 1, b"jurim"), Err(PersistError::Truncated(_))));
        assert!(matches!(read_document::<Doc>("jurimodel", 1, b""), Err(PersistError::BadFormat { .. })));
    }

    #[test]
    fn float_codec_is_bit_exact() {
        let values = [0.1, -0.0, 1e-300, 123456.789, f64::MIN_POSITIVE];
        let back = decode_f64s(&encode_f64s(&values), values.len(), "x").unwrap();
        assert_eq!(
            values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            back.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert!(decode_f64s(&encode_f64s(&values), 4, "x").is_err());
    }
}
