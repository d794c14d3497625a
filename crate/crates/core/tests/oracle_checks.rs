mod support;

use juri_core::eval::{f1_score, Averaging, ConfusionMatrix};
use juri_core::features::{FeatureVector, TfidfModel};
use juri_core::model::{loss_and_gradient, Weights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::oracles;

fn random_docs(rng: &mut ChaCha8Rng, n_docs: usize, n_terms: usize) -> Vec<Vec<String>> {
    (0..n_docs)
        .map(|_| {
            let len = rng.gen_range(1..=8);
            (0..len).map(|_| format!("t{}", rng.gen_range(0..n_terms))).collect()
        })
        .collect()
}

#[test]
fn tfidf_matches_definition_on_random_fixtures() {
    for seed in 0..25u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let docs = random_docs(&mut rng, 5, 10);
        for min_df in [1, 2] {
            let Ok(model) = TfidfModel::fit(&docs, min_df) else { continue };
            let mut probes = docs.clone();
            probes.extend(random_docs(&mut rng, 3, 12));
            for doc in &probes {
                let expected = oracles::tfidf_by_definition(&docs, min_df, doc);
                let got = model.transform(doc);
                assert_eq!(got.entries.len(), expected.len(), "seed {seed} doc {doc:?}");
                for (i, w) in &got.entries {
                    let term = &model.vocabulary.terms()[*i];
                    let e = expected[term];
                    assert!((w - e).abs() <= 1e-9, "seed {seed} term {term}: {w} vs {e}");
                }
            }
        }
    }
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let (classes, features, samples) = (3, 5, 16);
    for seed in 0..24u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let dense_w: Vec<Vec<f64>> =
            (0..classes).map(|_| (0..=features).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let dense_x: Vec<Vec<f64>> =
            (0..samples).map(|_| (0..features).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<usize> = (0..samples).map(|_| rng.gen_range(0..classes)).collect();
        let lambda = if seed % 2 == 0 { 0.0 } else { 0.05 };

        let weights = Weights { n_classes: classes, n_features: features, data: dense_w.concat() };
        let x: Vec<FeatureVector> = dense_x.iter().map(|r| FeatureVector::from_dense(r)).collect();
        let (loss, grad) = loss_and_gradient(&weights, &x, &y, lambda).unwrap();

        let oracle_loss = oracles::dense_loss(&dense_w, &dense_x, &y, lambda);
        assert!((loss - oracle_loss).abs() < 1e-12, "seed {seed}: {loss} vs {oracle_loss}");
        let fd = oracles::finite_difference_gradient(&dense_w, &dense_x, &y, lambda, 1e-5).concat();
        let err = oracles::max_relative_error(&grad.data, &fd);
        assert!(err <= 1e-4, "seed {seed}: max relative error {err}");
    }
}

#[test]
fn f1_matches_hand_computation() {
    let counts = vec![vec![8, 2], vec![3, 7]];
    let (per_class, macro_avg, weighted) = oracles::f1_by_hand(&counts);
    // 2PR/(P+R) with P=8/11, R=8/10 reduces to 16/21; class 1 to 14/19.
    assert!((per_class[0] - 16.0 / 21.0).abs() < 1e-15);
    assert!((per_class[1] - 14.0 / 19.0).abs() < 1e-15);
    let cm = ConfusionMatrix::from_counts(counts);
    assert!((f1_score(&cm, Averaging::Macro) - macro_avg).abs() < 1e-9);
    assert!((f1_score(&cm, Averaging::Weighted) - weighted).abs() < 1e-9);
    assert!((macro_avg - 0.7494).abs() < 1e-4);
}

#[test]
fn f1_matches_hand_computation_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(2..6);
        let counts: Vec<Vec<u64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..20)).collect()).collect();
        if counts.iter().flatten().sum::<u64>() == 0 {
            continue;
        }
        let (_, macro_avg, weighted) = oracles::f1_by_hand(&counts);
        let cm = ConfusionMatrix::from_counts(counts);
        assert!((f1_score(&cm, Averaging::Macro) - macro_avg).abs() < 1e-12);
        assert!((f1_score(&cm, Averaging::Weighted) - weighted).abs() < 1e-12);
    }
}
