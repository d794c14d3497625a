//! Definition-level reference computations, independent of the library code paths.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;

/// TF-IDF weights by definition: term -> weight, for one document against a
/// corpus. Terms are kept when they occur in at least `min_df` documents.
pub fn tfidf_by_definition(corpus: &[Vec<String>], min_df: usize, doc: &[String]) -> BTreeMap<String, f64> {
    let n = corpus.len() as f64;
    let mut raw = BTreeMap::new();
    for term in doc {
        if raw.contains_key(term) {
            continue;
        }
        let df = corpus.iter().filter(|d| d.contains(term)).count();
        if df == 0 || df < min_df {
            continue;
        }
        let tf = doc.iter().filter(|t| *t == term).count() as f64;
        let idf = ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0;
        raw.insert(term.clone(), tf * idf);
    }
    let norm = raw.values().map(|w| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for w in raw.values_mut() {
            *w /= norm;
        }
    }
    raw
}

/// Dense softmax cross-entropy plus half-L2 on non-bias weights.
/// `w` is `classes x (features + 1)` with the bias last.
pub fn dense_loss(w: &[Vec<f64>], x: &[Vec<f64>], y: &[usize], lambda: f64) -> f64 {
    let mut total = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let logits: Vec<f64> = w
            .iter()
            .map(|row| row[xi.len()] + row.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let z: f64 = logits.iter().map(|l| l.exp()).sum();
        total += -(logits[yi].exp() / z).ln();
    }
    let penalty: f64 = w.iter().map(|row| row[..row.len() - 1].iter().map(|v| v * v).sum::<f64>()).sum();
    total / x.len() as f64 + 0.5 * lambda * penalty
}

/// Central finite-difference gradient of [`dense_loss`].
pub fn finite_difference_gradient(w: &[Vec<f64>], x: &[Vec<f64>], y: &[usize], lambda: f64, step: f64) -> Vec<Vec<f64>> {
    let mut grad = vec![vec![0.0; w[0].len()]; w.len()];
    let mut probe = w.to_vec();
    for c in 0..w.len() {
        for j in 0..w[0].len() {
            let orig = probe[c][j];
            probe[c][j] = orig + step;
            let up = dense_loss(&probe, x, y, lambda);
            probe[c][j] = orig - step;
            let down = dense_loss(&probe, x, y, lambda);
            probe[c][j] = orig;
            grad[c][j] = (up - down) / (2.0 * step);
        }
    }
    grad
}

/// Largest relative error, with the denominator floored at 1e-8 so
/// near-zero components compare absolutely.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

/// Per-class F1 and macro/weighted averages from a confusion matrix, written
/// out with explicit precision and recall.
pub fn f1_by_hand(counts: &[Vec<u64>]) -> (Vec<f64>, f64, f64) {
    let n = counts.len();
    let mut per_class = Vec::new();
    let mut supports = Vec::new();
    for c in 0..n {
        let tp = counts[c][c] as f64;
        let fp: f64 = (0..n).filter(|&r| r != c).map(|r| counts[r][c] as f64).sum();
        let fn_: f64 = (0..n).filter(|&p| p != c).map(|p| counts[c][p] as f64).sum();
        let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let r = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        per_class.push(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 });
        supports.push(tp + fn_);
    }
    let macro_avg = per_class.iter().sum::<f64>() / n as f64;
    let total: f64 = supports.iter().sum();
    let weighted = per_class.iter().zip(&supports).map(|(f, s)| f * s).sum::<f64>() / total;
    (per_class, macro_avg, weighted)
}
