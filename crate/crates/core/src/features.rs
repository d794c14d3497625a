//! Vocabulary construction and L2-normalized TF-IDF vectors.
//!
//! Weights use raw term counts and the smoothed inverse document frequency
//! `ln((1 + N) / (1 + df)) + 1`, where `N` is the number of fitted documents.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("cannot fit TF-IDF on an empty document list")]
    NoDocuments,
    #[error("vocabulary is empty after pruning terms seen in fewer than {min_df} documents")]
    EmptyVocabulary { min_df: usize },
}

/// Sparse vector with entries sorted by index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Index one past the largest stored index.
    pub fn dim_bound(&self) -> usize {
        self.entries.last().map_or(0, |(i, _)| i + 1)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        FeatureVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyParts", into = "VocabularyParts")]
pub struct Vocabulary {
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    n_documents: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyParts {
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    n_documents: usize,
}

impl From<VocabularyParts> for Vocabulary {
    fn from(p: VocabularyParts) -> Self {
        Vocabulary::from_parts(p.terms, p.document_frequency, p.n_documents)
    }
}

impl From<Vocabulary> for VocabularyParts {
    fn from(v: Vocabulary) -> Self {
        VocabularyParts { terms: v.terms, document_frequency: v.document_frequency, n_documents: v.n_documents }
    }
}

impl Vocabulary {
    pub fn from_parts(terms: Vec<String>, document_frequency: Vec<usize>, n_documents: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { terms, document_frequency, n_documents, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self) -> &[usize] {
        &self.document_frequency
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocabulary: Vocabulary,
    pub idf: Vec<f64>,
    pub min_df: usize,
}

pub fn smoothed_idf(n_documents: usize, document_frequency: usize) -> f64 {
    ((1.0 + n_documents as f64) / (1.0 + document_frequency as f64)).ln() + 1.0
}

impl TfidfModel {
    /// Terms appearing in at least `min_df` documents, indexed by first appearance.
    pub fn fit<D: AsRef<[String]>>(documents: &[D], min_df: usize) -> Result<Self, FeatureError> {
        if documents.is_empty() {
            return Err(FeatureError::NoDocuments);
        }
        let mut order: Vec<&str> = Vec::new();
        let mut df: HashMap<&str, usize> = HashMap::new();
        let mut last_doc: HashMap<&str, usize> = HashMap::new();
        for (d, doc) in documents.iter().enumerate() {
            for term in doc.as_ref() {
                let term = term.as_str();
                match last_doc.get(term) {
                    Some(&seen) if seen == d => continue,
                    Some(_) => {}
                    None => order.push(term),
                }
                last_doc.insert(term, d);
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let n = documents.len();
        let mut terms = Vec::new();
        let mut freqs = Vec::new();
        for term in order {
            let f = df[term];
            if f >= min_df {
                terms.push(term.to_string());
                freqs.push(f);
            }
        }
        if terms.is_empty() {
            return Err(FeatureError::EmptyVocabulary { min_df });
        }
        let idf = freqs.iter().map(|&f| smoothed_idf(n, f)).collect();
        Ok(TfidfModel {
            vocabulary: Vocabulary::from_parts(terms, freqs, n),
            idf,
            min_df,
        })
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    /// Count times idf per in-vocabulary term, L2-normalized. Unknown terms are
    /// ignored; a document with none yields the zero vector.
    pub fn transform(&self, document: &[String]) -> FeatureVector {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for term in document {
            if let Some(i) = self.vocabulary.index_of(term) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts.into_iter().map(|(i, c)| (i, c * self.idf[i])).collect();
        entries.sort_by_key(|(i, _)| *i);
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut entries {
                *w /= norm;
            }
        }
        FeatureVector { entries }
    }
}
