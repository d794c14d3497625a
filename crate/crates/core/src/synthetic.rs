//! Synthetic decision corpora with controllable label noise.
//!
//! Each class owns a disjoint pool of signature words; all classes share a
//! background pool. A description draws `SIGNATURE_WORDS` signature words and
//! `BACKGROUND_WORDS` background words. With probability `noise` each
//! signature word is swapped for one from another class's pool.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{normalize_description, RawDecision};
use crate::dataset::Task;

pub const SIGNATURE_POOL: usize = 30;
pub const BACKGROUND_POOL: usize = 200;
pub const SIGNATURE_WORDS: usize = 6;
pub const BACKGROUND_WORDS: usize = 12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SyntheticError {
    #[error("noise must lie in [0, 1), got {0}")]
    Noise(f64),
    #[error("n_per_class must be positive")]
    Empty,
}

/// Class label with the decision and unanimity texts that the default rules map to it.
struct ClassSpec {
    label: &'static str,
    decision_text: &'static str,
    unanimity_text: &'static str,
}

fn class_specs(task: Task) -> Vec<ClassSpec> {
    match task {
        Task::Decision => vec![
            ClassSpec { label: "yes", decision_text: "Recurso conhecido e provido", unanimity_text: "Unanimidade" },
            ClassSpec {
                label: "partial",
                decision_text: "Recurso conhecido e parcialmente provido",
                unanimity_text: "Unanimidade",
            },
            ClassSpec { label: "no", decision_text: "Recurso conhecido e não provido", unanimity_text: "Unanimidade" },
        ],
        Task::Unanimity => vec![
            ClassSpec {
                label: "unanimity",
                decision_text: "Recurso conhecido e provido",
                unanimity_text: "Decisão unânime",
            },
            ClassSpec {
                label: "not-unanimity",
                decision_text: "Recurso conhecido e provido",
                unanimity_text: "Por maioria de votos",
            },
        ],
    }
}

pub fn class_labels(task: Task) -> Vec<&'static str> {
    class_specs(task).into_iter().map(|c| c.label).collect()
}

fn letters(mut n: usize, width: usize) -> String {
    let mut out = vec![b'a'; width];
    for slot in out.iter_mut().rev() {
        *slot = b'a' + (n % 26) as u8;
        n /= 26;
    }
    String::from_utf8(out).expect("ascii")
}

/// Signature word `j` of class `class`. Words end in a consonant no suffix
/// rule strips, so they survive preprocessing unchanged.
pub fn signature_word(class: usize, j: usize) -> String {
    format!("z{}{}k", letters(class, 1), letters(j, 2))
}

pub fn background_word(j: usize) -> String {
    format!("w{}k", letters(j, 2))
}

/// Generates `n_per_class` records per class with distinct descriptions,
/// interleaving classes.
pub fn generate(task: Task, n_per_class: usize, noise: f64, seed: u64) -> Result<Vec<RawDecision>, SyntheticError> {
    if !(0.0..1.0).contains(&noise) {
        return Err(SyntheticError::Noise(noise));
    }
    if n_per_class == 0 {
        return Err(SyntheticError::Empty);
    }
    let specs = class_specs(task);
    let n_classes = specs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(n_per_class * n_classes);
    for i in 0..n_per_class {
        for (c, spec) in specs.iter().enumerate() {
            let description = loop {
                let mut words = Vec::with_capacity(SIGNATURE_WORDS + BACKGROUND_WORDS);
                for _ in 0..SIGNATURE_WORDS {
                    let mut owner = c;
                    if rng.gen::<f64>() < noise {
                        owner = (c + rng.gen_range(1..n_classes)) % n_classes;
                    }
                    words.push(signature_word(owner, rng.gen_range(0..SIGNATURE_POOL)));
                }
                for _ in 0..BACKGROUND_WORDS {
                    words.push(background_word(rng.gen_range(0..BACKGROUND_POOL)));
                }
                words.shuffle(&mut rng);
                let text = format!("Apelação cível. {}.", words.join(" "));
                if seen.insert(normalize_description(&text)) {
                    break text;
                }
            };
            records.push(RawDecision {
                id: format!("syn-{}-{i}", spec.label),
                description,
                decision_text: spec.decision_text.to_string(),
                unanimity_text: Some(spec.unanimity_text.to_string()),
                judgment_date: None,
            });
        }
    }
    Ok(records)
}
