//! Rule-based outcome and unanimity labeling of decision texts.
//!
//! A [`RuleSet`] is an ordered list of regular expressions, each mapped to a
//! label. Both the patterns and the text are accent-folded before matching and
//! matching is case-insensitive. The first rule (lowest priority number) that
//! matches decides the label.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, RawDecision};
use crate::textproc::fold_accents;

const DEFAULT_RULES: &str = include_str!("../data/rules.toml");

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("invalid pattern for rule with priority {priority}: {source}")]
    Pattern {
        priority: i64,
        #[source]
        source: regex::Error,
    },
    #[error("duplicate priority {0} in rule set")]
    DuplicatePriority(i64),
    #[error("unknown label '{0}'")]
    UnknownLabel(String),
    #[error("rule file: {0}")]
    Syntax(String),
    #[error("rule set '{0}' is empty")]
    Empty(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionLabel {
    Yes,
    Partial,
    No,
    NotCognized,
    Prejudicada,
    Administrative,
}

impl DecisionLabel {
    pub const ALL: [DecisionLabel; 6] = [
        DecisionLabel::Yes,
        DecisionLabel::Partial,
        DecisionLabel::No,
        DecisionLabel::NotCognized,
        DecisionLabel::Prejudicada,
        DecisionLabel::Administrative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DecisionLabel::Yes => "yes",
            DecisionLabel::Partial => "partial",
            DecisionLabel::No => "no",
            DecisionLabel::NotCognized => "not-cognized",
            DecisionLabel::Prejudicada => "prejudicada",
            DecisionLabel::Administrative => "administrative",
        }
    }

    /// Outcomes on the merits: yes, partial and no.
    pub fn is_predictive(self) -> bool {
        matches!(self, DecisionLabel::Yes | DecisionLabel::Partial | DecisionLabel::No)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnanimityLabel {
    Unanimity,
    NotUnanimity,
}

impl UnanimityLabel {
    pub const ALL: [UnanimityLabel; 2] = [UnanimityLabel::Unanimity, UnanimityLabel::NotUnanimity];

    pub fn as_str(self) -> &'static str {
        match self {
            UnanimityLabel::Unanimity => "unanimity",
            UnanimityLabel::NotUnanimity => "not-unanimity",
        }
    }
}

macro_rules! label_text_impls {
    ($ty:ty) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = RuleError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$ty>::ALL
                    .into_iter()
                    .find(|l| l.as_str() == s)
                    .ok_or_else(|| RuleError::UnknownLabel(s.to_string()))
            }
        }
    };
}

label_text_impls!(DecisionLabel);
label_text_impls!(UnanimityLabel);

/// A pattern/label pair as written in a rule file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRule {
    pub priority: i64,
    pub label: String,
    pub pattern: String,
}

#[derive(Debug, Clone)]
struct CompiledRule<L> {
    priority: i64,
    label: L,
    source: String,
    regex: Regex,
}

/// Priority-ordered rules producing labels of type `L`.
#[derive(Debug, Clone)]
pub struct RuleSet<L> {
    rules: Vec<CompiledRule<L>>,
}

impl<L> RuleSet<L>
where
    L: Copy + FromStr<Err = RuleError> + fmt::Display,
{
    pub fn new(rules: &[LabelRule]) -> Result<Self, RuleError> {
        let mut seen = HashSet::new();
        let mut compiled = Vec::with_capacity(rules.len());
        for rule in rules {
            if !seen.insert(rule.priority) {
                return Err(RuleError::DuplicatePriority(rule.priority));
            }
            let label = rule.label.parse::<L>()?;
            let regex = Regex::new(&format!("(?i){}", fold_accents(&rule.pattern)))
                .map_err(|source| RuleError::Pattern { priority: rule.priority, source })?;
            compiled.push(CompiledRule {
                priority: rule.priority,
                label,
                source: rule.pattern.clone(),
                regex,
            });
        }
        compiled.sort_by_key(|r| r.priority);
        Ok(RuleSet { rules: compiled })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Label of the first matching rule, if any.
    pub fn label(&self, text: &str) -> Option<L> {
        let folded = fold_accents(text);
        self.rules
            .iter()
            .find(|r| r.regex.is_match(&folded))
            .map(|r| r.label)
    }

    pub fn rules(&self) -> Vec<LabelRule> {
        self.rules
            .iter()
            .map(|r| LabelRule {
                priority: r.priority,
                label: r.label.to_string(),
                pattern: r.source.clone(),
            })
            .collect()
    }
}

pub fn label_decision(decision_text: &str, rules: &RuleSet<DecisionLabel>) -> Option<DecisionLabel> {
    rules.label(decision_text)
}

pub fn label_unanimity(
    unanimity_text: Option<&str>,
    rules: &RuleSet<UnanimityLabel>,
) -> Option<UnanimityLabel> {
    unanimity_text.and_then(|t| rules.label(t))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    #[serde(default)]
    decision: Vec<LabelRule>,
    #[serde(default)]
    unanimity: Vec<LabelRule>,
}

/// The decision and unanimity rule sets used together by the pipeline.
#[derive(Debug, Clone)]
pub struct LabelerRules {
    pub decision: RuleSet<DecisionLabel>,
    pub unanimity: RuleSet<UnanimityLabel>,
}

impl LabelerRules {
    /// Parses a TOML rule file with `[[decision]]` and `[[unanimity]]` tables.
    pub fn from_toml(text: &str) -> Result<Self, RuleError> {
        let file: RuleFile = toml::from_str(text).map_err(|e| RuleError::Syntax(e.to_string()))?;
        if file.decision.is_empty() {
            return Err(RuleError::Empty("decision"));
        }
        if file.unanimity.is_empty() {
            return Err(RuleError::Empty("unanimity"));
        }
        Ok(LabelerRules {
            decision: RuleSet::new(&file.decision)?,
            unanimity: RuleSet::new(&file.unanimity)?,
        })
    }

    /// Hex SHA-256 over the rules in priority order; stored in model files.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (kind, rules) in [("decision", self.decision.rules()), ("unanimity", self.unanimity.rules())] {
            for r in rules {
                hasher.update(format!("{kind}\t{}\t{}\t{}\n", r.priority, r.label, r.pattern));
            }
        }
        hex(&hasher.finalize())
    }
}

impl Default for LabelerRules {
    fn default() -> Self {
        LabelerRules::from_toml(DEFAULT_RULES).expect("embedded rule file is valid")
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A deduplicated record with whichever labels the rules resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCase {
    pub record: RawDecision,
    pub decision: Option<DecisionLabel>,
    pub unanimity: Option<UnanimityLabel>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub unlabeled_decision: usize,
    pub unlabeled_unanimity: usize,
}

pub fn build_labeled_dataset(corpus: &Corpus, rules: &LabelerRules) -> (Vec<LabeledCase>, ExclusionReport) {
    let mut report = ExclusionReport::default();
    let cases = corpus
        .records
        .iter()
        .map(|record| {
            let decision = label_decision(&record.decision_text, &rules.decision);
            let unanimity = label_unanimity(record.unanimity_text.as_deref(), &rules.unanimity);
            if decision.is_none() {
                report.unlabeled_decision += 1;
            }
            if unanimity.is_none() {
                report.unlabeled_unanimity += 1;
            }
            LabeledCase { record: record.clone(), decision, unanimity }
        })
        .collect();
    (cases, report)
}
