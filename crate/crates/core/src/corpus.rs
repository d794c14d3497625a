//! Decision record ingestion, description deduplication and predictive filtering.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::labeler::DecisionLabel;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("empty corpus")]
    Empty,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("corpus is not valid UTF-8: {0}")]
    Encoding(String),
    #[error("unknown corpus format '{0}' (expected jsonl or csv)")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One appellate decision as found in the source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDecision {
    pub id: String,
    /// Case summary, the text the classifiers see.
    pub description: String,
    /// Dispositive phrase, e.g. "Recurso conhecido e provido".
    pub decision_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unanimity_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgment_date: Option<String>,
}

impl RawDecision {
    fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.description.trim().is_empty() {
            return Err("empty description".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Csv => "csv",
        })
    }
}

/// Record counts at each dataset-construction stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub loaded: usize,
    pub after_dedup: Option<usize>,
    pub after_filter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<RawDecision>,
    pub census: Census,
}

impl Corpus {
    pub fn new(records: Vec<RawDecision>) -> Self {
        let census = Census {
            loaded: records.len(),
            ..Census::default()
        };
        Corpus { records, census }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn parse_corpus<R: Read>(mut source: R, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|e| CorpusError::Encoding(e.to_string()))?;
    let records = match format {
        CorpusFormat::Jsonl => parse_jsonl(&text)?,
        CorpusFormat::Csv => parse_csv(&text)?,
    };
    if records.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(Corpus::new(records))
}

fn parse_jsonl(text: &str) -> Result<Vec<RawDecision>, CorpusError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let record: RawDecision = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            reason: e.to_string(),
        })?;
        record
            .validate()
            .map_err(|reason| CorpusError::Malformed { line: line_no, reason })?;
        records.push(record);
    }
    Ok(records)
}

fn parse_csv(text: &str) -> Result<Vec<RawDecision>, CorpusError> {
    if text.trim().is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(b',')
        .quote(b'"')
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Malformed { line: 1, reason: e.to_string() })?
        .clone();
    for required in ["id", "description", "decision_text"] {
        if !headers.iter().any(|h| h == required) {
            return Err(CorpusError::Malformed {
                line: 1,
                reason: format!("missing column '{required}' in header"),
            });
        }
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CorpusError::Malformed {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line_no = row.position().map_or(0, |p| p.line() as usize);
        let field = |name: &str| -> Option<String> {
            headers
                .iter()
                .position(|h| h == name)
                .and_then(|i| row.get(i))
                .map(str::to_string)
        };
        let optional = |name: &str| field(name).filter(|v| !v.is_empty());
        let record = RawDecision {
            id: field("id").unwrap_or_default(),
            description: field("description").unwrap_or_default(),
            decision_text: field("decision_text").unwrap_or_default(),
            unanimity_text: optional("unanimity_text"),
            judgment_date: optional("judgment_date"),
        };
        record
            .validate()
            .map_err(|reason| CorpusError::Malformed { line: line_no, reason })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_corpus<W: Write>(
    records: &[RawDecision],
    format: CorpusFormat,
    mut sink: W,
) -> Result<(), CorpusError> {
    match format {
        CorpusFormat::Jsonl => {
            for record in records {
                let line = serde_json::to_string(record).map_err(std::io::Error::other)?;
                writeln!(sink, "{line}")?;
            }
        }
        CorpusFormat::Csv => {
            let mut writer = csv::Writer::from_writer(sink);
            writer
                .write_record(["id", "description", "decision_text", "unanimity_text", "judgment_date"])
                .map_err(std::io::Error::other)?;
            for r in records {
                writer
                    .write_record([
                        r.id.as_str(),
                        r.description.as_str(),
                        r.decision_text.as_str(),
                        r.unanimity_text.as_deref().unwrap_or(""),
                        r.judgment_date.as_deref().unwrap_or(""),
                    ])
                    .map_err(std::io::Error::other)?;
            }
            writer.flush()?;
        }
    }
    Ok(())
}

/// Lowercased, whitespace-collapsed description used as the duplicate key.
pub fn normalize_description(description: &str) -> String {
    description
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Keeps the first record for each normalized description.
pub fn dedup_by_description(corpus: Corpus) -> Corpus {
    let Corpus { records, mut census } = corpus;
    let mut seen = HashSet::with_capacity(records.len());
    let records: Vec<RawDecision> = records
        .into_iter()
        .filter(|r| seen.insert(normalize_description(&r.description)))
        .collect();
    census.after_dedup = Some(records.len());
    Corpus { records, census }
}

/// Drops records whose decision label is not one of yes, partial or no.
pub fn filter_predictive<T>(labeled: Vec<(T, DecisionLabel)>) -> Vec<(T, DecisionLabel)> {
    labeled
        .into_iter()
        .filter(|(_, label)| label.is_predictive())
        .collect()
}
