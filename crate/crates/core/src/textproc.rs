//! Tokenization, stop-word removal and suffix stripping for Portuguese text.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::labeler::hex;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_pt.txt");
const DEFAULT_STEM_RULES: &str = include_str!("../data/stem_rules_pt.txt");

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("stem rules line {line}: {reason}")]
    StemRule { line: usize, reason: String },
    #[error("min_token_length must be at least 1")]
    MinTokenLength,
}

/// Removes diacritics: decomposes to NFD and drops combining marks.
pub fn fold_accents(text: &str) -> String {
    text.nfd().filter(|c| !is_combining_mark(*c)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemRule {
    pub suffix: String,
    pub min_stem_length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub stopwords: BTreeSet<String>,
    /// Ordered by descending suffix length.
    pub stem_rules: Vec<StemRule>,
    pub strip_accents: bool,
    pub min_token_length: usize,
}

impl PreprocessConfig {
    pub fn new(
        stopwords: BTreeSet<String>,
        mut stem_rules: Vec<StemRule>,
        strip_accents: bool,
        min_token_length: usize,
    ) -> Result<Self, TextError> {
        if min_token_length == 0 {
            return Err(TextError::MinTokenLength);
        }
        stem_rules.sort_by_key(|r| std::cmp::Reverse(r.suffix.chars().count()));
        Ok(PreprocessConfig { stopwords, stem_rules, strip_accents, min_token_length })
    }

    /// No stop-words, no stemming, accents kept, every token length allowed.
    pub fn passthrough() -> Self {
        PreprocessConfig {
            stopwords: BTreeSet::new(),
            stem_rules: Vec::new(),
            strip_accents: false,
            min_token_length: 1,
        }
    }

    pub fn stopwords_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.stopwords {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        hex(&hasher.finalize())
    }

    pub fn stem_rules_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for r in &self.stem_rules {
            hasher.update(format!("{}\t{}\n", r.suffix, r.min_stem_length));
        }
        hex(&hasher.finalize())
    }
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig::new(
            parse_stopwords(DEFAULT_STOPWORDS),
            parse_stem_rules(DEFAULT_STEM_RULES).expect("embedded stem rules are valid"),
            true,
            2,
        )
        .expect("default config is valid")
    }
}

/// One word per line; blank lines and `#` comments are ignored.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// One `suffix<TAB>min_stem_length` per line.
pub fn parse_stem_rules(text: &str) -> Result<Vec<StemRule>, TextError> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |reason: &str| TextError::StemRule { line: idx + 1, reason: reason.to_string() };
        let (suffix, min) = line.split_once('\t').ok_or_else(|| err("expected suffix<TAB>min_stem_length"))?;
        let suffix = suffix.trim().to_lowercase();
        if suffix.is_empty() {
            return Err(err("empty suffix"));
        }
        let min_stem_length = min.trim().parse::<usize>().map_err(|_| err("min_stem_length is not an integer"))?;
        rules.push(StemRule { suffix, min_stem_length });
    }
    rules.sort_by_key(|r| std::cmp::Reverse(r.suffix.chars().count()));
    Ok(rules)
}

fn is_token_char(c: char) -> bool {
    // Ordinal indicators are Unicode letters but mark numbers ("5º", "2ª").
    c.is_alphabetic() && c != 'º' && c != 'ª'
}

/// Maximal runs of letters from the lowercased text.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !is_token_char(c))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>, config: &PreprocessConfig) -> Vec<String> {
    tokens.into_iter().filter(|t| !config.stopwords.contains(t)).collect()
}

fn rule_applies(token: &str, token_len: usize, suffix: &str, suffix_len: usize, min: usize) -> bool {
    token.ends_with(suffix) && token_len >= suffix_len + min
}

fn stem_with(token: &str, rules: &[(String, usize, usize)]) -> String {
    let len = token.chars().count();
    let applicable = |t: &str, n: usize| rules.iter().any(|(s, sl, m)| rule_applies(t, n, s, *sl, *m));
    for (suffix, suffix_len, min) in rules {
        if !rule_applies(token, len, suffix, *suffix_len, *min) {
            continue;
        }
        let stem = &token[..token.len() - suffix.len()];
        // Only a result no rule can shorten further is accepted, so stemming is idempotent.
        if !applicable(stem, len - suffix_len) {
            return stem.to_string();
        }
    }
    token.to_string()
}

fn effective_rules(config: &PreprocessConfig) -> Vec<(String, usize, usize)> {
    config
        .stem_rules
        .iter()
        .map(|r| {
            let suffix = if config.strip_accents { fold_accents(&r.suffix) } else { r.suffix.clone() };
            let n = suffix.chars().count();
            (suffix, n, r.min_stem_length)
        })
        .collect()
}

/// Strips the longest configured suffix whose remaining stem is long enough.
///
/// At most one rule fires. A candidate stem that another rule could still
/// shorten is skipped in favour of the next shorter suffix. With accent
/// stripping on, the token and suffixes are folded before matching.
pub fn stem(token: &str, config: &PreprocessConfig) -> String {
    let rules = effective_rules(config);
    if config.strip_accents {
        stem_with(&fold_accents(token), &rules)
    } else {
        stem_with(token, &rules)
    }
}

/// Compiled form of a [`PreprocessConfig`] for repeated use.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PreprocessConfig,
    rules: Vec<(String, usize, usize)>,
    folded_stopwords: BTreeSet<String>,
}

impl Preprocessor {
    pub fn new(config: PreprocessConfig) -> Self {
        let rules = effective_rules(&config);
        let folded_stopwords = if config.strip_accents {
            config.stopwords.iter().map(|w| fold_accents(w)).collect()
        } else {
            config.stopwords.clone()
        };
        Preprocessor { config, rules, folded_stopwords }
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    pub fn process(&self, text: &str) -> Vec<String> {
        let tokens = remove_stopwords(tokenize(text), &self.config);
        tokens
            .into_iter()
            .map(|t| {
                if self.config.strip_accents {
                    stem_with(&fold_accents(&t), &self.rules)
                } else {
                    stem_with(&t, &self.rules)
                }
            })
            .filter(|t| !self.folded_stopwords.contains(t))
            .filter(|t| t.chars().count() >= self.config.min_token_length)
            .collect()
    }
}

/// tokenize, drop stop-words, stem (and fold accents), drop stems that
/// coincide with a stop-word, then drop tokens shorter than the minimum.
pub fn preprocess(text: &str, config: &PreprocessConfig) -> Vec<String> {
    Preprocessor::new(config.clone()).process(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Apelação Cível, art. 5º"), strs(&["apelação", "cível", "art"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("AAA aaa"), strs(&["aaa", "aaa"]));
        assert!(tokenize("!!! 123 ... --").is_empty());
        assert_eq!(tokenize("lei nº8.078/90-CDC"), strs(&["lei", "n", "cdc"]));
    }

    #[test]
    fn stopword_examples() {
        let mut cfg = PreprocessConfig::passthrough();
        cfg.stopwords.insert("de".into());
        assert_eq!(remove_stopwords(strs(&["recurso", "de", "apelação"]), &cfg), strs(&["recurso", "apelação"]));
        assert_eq!(remove_stopwords(strs(&["de", "de"]), &cfg), Vec::<String>::new());
        let empty = PreprocessConfig::passthrough();
        assert_eq!(remove_stopwords(strs(&["de", "x"]), &empty), strs(&["de", "x"]));
    }

    #[test]
    fn stem_single_rule() {
        let cfg = PreprocessConfig::new(
            BTreeSet::new(),
            vec![StemRule { suffix: "al".into(), min_stem_length: 4 }],
            false,
            1,
        )
        .unwrap();
        assert_eq!(stem("processual", &cfg), "processu");
        assert_eq!(stem("moral", &cfg), "moral");
        assert_eq!(stem("al", &cfg), "al");
    }

    #[test]
    fn stem_prefers_longest_suffix() {
        let cfg = PreprocessConfig::new(
            BTreeSet::new(),
            vec![
                StemRule { suffix: "es".into(), min_stem_length: 2 },
                StemRule { suffix: "ões".into(), min_stem_length: 2 },
            ],
            false,
            1,
        )
        .unwrap();
        assert_eq!(cfg.stem_rules[0].suffix, "ões");
        assert_eq!(stem("decisões", &cfg), "decis");
    }

    #[test]
    fn stem_skips_results_that_would_shrink_again() {
        let cfg = PreprocessConfig::new(
            BTreeSet::new(),
            vec![
                StemRule { suffix: "mente".into(), min_stem_length: 4 },
                StemRule { suffix: "al".into(), min_stem_length: 4 },
                StemRule { suffix: "e".into(), min_stem_length: 3 },
            ],
            false,
            1,
        )
        .unwrap();
        let once = stem("constitucionalmente", &cfg);
        assert_eq!(once, "constitucionalment");
        assert_eq!(stem(&once, &cfg), once);
    }

    #[test]
    fn default_stemmer_examples() {
        let cfg = PreprocessConfig::default();
        assert_eq!(stem("apelação", &cfg), "apel");
        assert_eq!(stem("decisões", &cfg), "decis");
        assert_eq!(stem("decisão", &cfg), "decis");
        assert_eq!(stem("processual", &cfg), "processu");
        assert_eq!(stem("danos", &cfg), "dan");
        assert_eq!(stem("dano", &cfg), "dan");
        assert_eq!(stem("cível", &cfg), "civel");
    }

    #[test]
    fn passthrough_preprocess() {
        let cfg = PreprocessConfig::passthrough();
        assert_eq!(preprocess("Direito Processual Civil", &cfg), strs(&["direito", "processual", "civil"]));
        assert!(preprocess(".,;!?", &PreprocessConfig::default()).is_empty());
    }

    #[test]
    fn default_preprocess_golden() {
        let cfg = PreprocessConfig::default();
        let out = preprocess(
            "Direito Processual Civil. Apelação Cível em Ação Ordinária de indenização por danos morais.",
            &cfg,
        );
        assert_eq!(out, strs(&["direit", "processu", "civil", "apel", "civel", "aca", "ordinari", "indeniz", "dan", "morais"]));
    }

    #[test]
    fn min_token_length_validated() {
        assert!(matches!(
            PreprocessConfig::new(BTreeSet::new(), vec![], true, 0),
            Err(TextError::MinTokenLength)
        ));
    }

    #[test]
    fn stem_rule_file_errors() {
        assert!(matches!(parse_stem_rules("al 4\n"), Err(TextError::StemRule { line: 1, .. })));
        assert!(matches!(parse_stem_rules("# c\nal\tx\n"), Err(TextError::StemRule { line: 2, .. })));
        assert_eq!(parse_stem_rules("al\t4\nmente\t4\n").unwrap()[0].suffix, "mente");
    }

    #[test]
    fn fold_accents_examples() {
        assert_eq!(fold_accents("Apelação Cível unânime"), "Apelacao Civel unanime");
    }
}
