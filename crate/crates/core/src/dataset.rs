//! Task datasets: labeled case descriptions ready for training and evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{dedup_by_description, filter_predictive, Corpus};
use crate::labeler::{build_labeled_dataset, LabeledCase, LabelerRules};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Decision,
    Unanimity,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Decision => "decision",
            Task::Unanimity => "unanimity",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "decision" => Ok(Task::Decision),
            "unanimity" => Ok(Task::Unanimity),
            other => Err(format!("unknown task '{other}' (expected decision or unanimity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub text: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub task: Task,
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.examples.iter().map(|e| e.label.as_str()).collect()
    }

    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        label_counts(self.examples.iter().map(|e| e.label.as_str()))
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            task: self.task,
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
        }
    }
}

pub fn label_counts<'a>(labels: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for l in labels {
        *counts.entry(l.to_string()).or_insert(0) += 1;
    }
    counts
}

/// Record counts through deduplication, labeling and filtering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCensus {
    pub loaded: usize,
    pub after_dedup: usize,
    pub unlabeled_decision: usize,
    pub unlabeled_unanimity: usize,
    /// Records carrying the task label (before dropping non-merit outcomes).
    pub task_labeled: usize,
    pub after_filter: usize,
    pub labels: BTreeMap<String, usize>,
}

/// Deduplicates, labels and filters a corpus into the dataset for `task`.
///
/// Both tasks keep only yes/partial/no decisions; the unanimity task further
/// requires a resolved unanimity label.
pub fn prepare_dataset(corpus: Corpus, rules: &LabelerRules, task: Task) -> (Dataset, DatasetCensus) {
    let corpus = dedup_by_description(corpus);
    let (cases, exclusions) = build_labeled_dataset(&corpus, rules);
    let (dataset, task_labeled) = select_task(cases, task);
    let census = DatasetCensus {
        loaded: corpus.census.loaded,
        after_dedup: corpus.len(),
        unlabeled_decision: exclusions.unlabeled_decision,
        unlabeled_unanimity: exclusions.unlabeled_unanimity,
        task_labeled,
        after_filter: dataset.len(),
        labels: dataset.label_counts(),
    };
    (dataset, census)
}

fn select_task(cases: Vec<LabeledCase>, task: Task) -> (Dataset, usize) {
    let with_decision: Vec<_> = cases
        .into_iter()
        .filter_map(|c| c.decision.map(|d| ((c.record, c.unanimity), d)))
        .collect();
    let (candidates, task_labeled) = match task {
        Task::Decision => {
            let n = with_decision.len();
            (with_decision, n)
        }
        Task::Unanimity => {
            let kept: Vec<_> = with_decision.into_iter().filter(|((_, u), _)| u.is_some()).collect();
            let n = kept.len();
            (kept, n)
        }
    };
    let examples = filter_predictive(candidates)
        .into_iter()
        .map(|((record, unanimity), decision)| {
            let label = match task {
                Task::Decision => decision.as_str(),
                Task::Unanimity => unanimity.expect("filtered above").as_str(),
            };
            Example { id: record.id, text: record.description, label: label.to_string() }
        })
        .collect();
    (Dataset { task, examples }, task_labeled)
}
