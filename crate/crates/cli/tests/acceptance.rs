//! Acceptance suite: one line per criterion, each checked against its tolerance
//! and runtime budget. Exits nonzero if any criterion fails.

#[path = "../../core/tests/support/oracles.rs"]
mod oracles;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use juri_cli::{
    cmd_evaluate, cmd_gen_synthetic, cmd_train, CorpusArgs, EvaluateArgs, GenSyntheticArgs, PreprocessArgs, TrainArgs,
    TrainingArgs,
};
use juri_core::dataset::prepare_dataset;
use juri_core::eval::{
    balance_target, cross_validate_with_models, f1_score, stratified_kfold, undersample_to_balance, Averaging,
    ConfusionMatrix,
};
use juri_core::features::{FeatureVector, TfidfModel};
use juri_core::labeler::{label_decision, label_unanimity, DecisionLabel, UnanimityLabel};
use juri_core::model::{loss_and_gradient, Weights};
use juri_core::persist::{load_model, save_model};
use juri_core::pipeline::{train_bundle, PipelineConfig};
use juri_core::synthetic::generate;
use juri_core::textproc::Preprocessor;
use juri_core::{Corpus, CorpusFormat, Dataset, Example, LabelerRules, Task};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn labeler_goldens() -> Outcome {
    let rules = LabelerRules::default();
    let decisions = [
        ("Recurso conhecido e provido", DecisionLabel::Yes),
        ("Recurso conhecido e parcialmente provido", DecisionLabel::Partial),
        ("Recurso conhecido e não provido", DecisionLabel::No),
    ];
    for (text, expected) in decisions {
        let got = label_decision(text, &rules.decision);
        ensure(got == Some(expected), || format!("{text:?} -> {got:?}, expected {expected}"))?;
    }
    for text in ["Unanimidade", "Decisão unânime"] {
        let got = label_unanimity(Some(text), &rules.unanimity);
        ensure(got == Some(UnanimityLabel::Unanimity), || format!("{text:?} -> {got:?}"))?;
    }
    Ok("3 decision rows and 2 unanimity phrasings exact".into())
}

fn dataset_of(counts: &[(&str, usize)]) -> Dataset {
    let examples = counts
        .iter()
        .flat_map(|&(label, n)| {
            (0..n).map(move |i| Example { id: format!("{label}-{i}"), text: format!("caso {i}"), label: label.into() })
        })
        .collect();
    Dataset { task: Task::Decision, examples }
}

fn dataset_arithmetic() -> Outcome {
    let decision = dataset_of(&[("no", 2415), ("partial", 866), ("yes", 762)]);
    let target = balance_target(&decision.label_counts());
    let balanced = undersample_to_balance(&decision, &target, 1).map_err(|e| e.to_string())?;
    let removed = decision.len() - balanced.len();
    ensure(removed == 1549, || format!("removed {removed}, expected 1549"))?;
    let expected = BTreeMap::from([("no".to_string(), 866), ("partial".to_string(), 866), ("yes".to_string(), 762)]);
    ensure(balanced.label_counts() == expected, || format!("counts {:?}", balanced.label_counts()))?;

    let unanimity = dataset_of(&[("unanimity", 2229), ("not-unanimity", 45)]);
    let target = balance_target(&unanimity.label_counts());
    let balanced = undersample_to_balance(&unanimity, &target, 1).map_err(|e| e.to_string())?;
    ensure(balanced.len() == 90, || format!("unanimity balanced to {}, expected 90", balanced.len()))?;
    Ok(format!("removed {removed}; unanimity set {}", balanced.len()))
}

fn tfidf_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..25u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let docs: Vec<Vec<String>> = (0..5)
            .map(|_| (0..rng.gen_range(1..=8)).map(|_| format!("t{}", rng.gen_range(0..10))).collect())
            .collect();
        let model = TfidfModel::fit(&docs, 1).map_err(|e| e.to_string())?;
        let probe: Vec<String> = (0..6).map(|_| format!("t{}", rng.gen_range(0..12))).collect();
        for doc in docs.iter().chain(std::iter::once(&probe)) {
            let expected = oracles::tfidf_by_definition(&docs, 1, doc);
            let got = model.transform(doc);
            ensure(got.entries.len() == expected.len(), || format!("seed {seed}: support differs"))?;
            for &(i, w) in &got.entries {
                let term = &model.vocabulary.terms()[i];
                let diff = (w - expected[term]).abs();
                worst = worst.max(diff);
                ensure(diff <= 1e-9, || format!("seed {seed} term {term}: off by {diff:e}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} entries, max abs diff {worst:.1e}"))
}

fn gradient_check() -> Outcome {
    let (classes, features, samples) = (3, 5, 16);
    let mut worst: f64 = 0.0;
    let instances = 24;
    for seed in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let w: Vec<Vec<f64>> =
            (0..classes).map(|_| (0..=features).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let x: Vec<Vec<f64>> =
            (0..samples).map(|_| (0..features).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<usize> = (0..samples).map(|_| rng.gen_range(0..classes)).collect();
        let lambda = [0.0, 1e-4, 0.1][seed as usize % 3];
        let weights = Weights { n_classes: classes, n_features: features, data: w.concat() };
        let sparse: Vec<FeatureVector> = x.iter().map(|r| FeatureVector::from_dense(r)).collect();
        let (_, grad) = loss_and_gradient(&weights, &sparse, &y, lambda).map_err(|e| e.to_string())?;
        let fd = oracles::finite_difference_gradient(&w, &x, &y, lambda, 1e-5).concat();
        let err = oracles::max_relative_error(&grad.data, &fd);
        worst = worst.max(err);
        ensure(err <= 1e-4, || format!("instance {seed}: relative error {err:e}"))?;
    }
    Ok(format!("{instances} instances, max relative error {worst:.1e}"))
}

fn stratification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let n_classes = rng.gen_range(2..6);
        let mut labels: Vec<String> = Vec::new();
        for c in 0..n_classes {
            labels.extend(std::iter::repeat_n(format!("c{c}"), rng.gen_range(5..80)));
        }
        let folds = stratified_kfold(&labels, 5, rng.gen()).map_err(|e| e.to_string())?;
        let mut seen = vec![0usize; labels.len()];
        for f in 0..5 {
            for i in folds.test_indices(f) {
                seen[i] += 1;
            }
        }
        ensure(seen.iter().all(|&s| s == 1), || format!("trial {trial}: folds do not partition the data"))?;
        let mut per_class: BTreeMap<&str, [usize; 5]> = BTreeMap::new();
        for (label, &f) in labels.iter().zip(&folds.fold_of) {
            per_class.entry(label).or_default()[f] += 1;
        }
        for (class, sizes) in per_class {
            let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
            ensure(spread <= 1, || format!("trial {trial}: class {class} spread {spread}"))?;
        }
    }
    Ok("100 multisets partitioned, spread <= 1".into())
}

fn f1_correctness() -> Outcome {
    let diagonal = ConfusionMatrix::from_counts(vec![vec![7, 0, 0], vec![0, 3, 0], vec![0, 0, 5]]);
    for avg in [Averaging::Weighted, Averaging::Macro] {
        let f = f1_score(&diagonal, avg);
        ensure(f == 1.0, || format!("diagonal {avg:?} F1 = {f}"))?;
    }
    // Hand computation: class 0 P=8/11 R=8/10 -> 16/21; class 1 P=7/9 R=7/10 -> 14/19.
    let frozen_macro = (16.0 / 21.0 + 14.0 / 19.0) / 2.0;
    let fixture = ConfusionMatrix::from_counts(vec![vec![8, 2], vec![3, 7]]);
    let (_, oracle_macro, oracle_weighted) = oracles::f1_by_hand(&[vec![8, 2], vec![3, 7]]);
    let got_macro = f1_score(&fixture, Averaging::Macro);
    let got_weighted = f1_score(&fixture, Averaging::Weighted);
    ensure((got_macro - frozen_macro).abs() <= 1e-9, || format!("macro {got_macro} vs {frozen_macro}"))?;
    ensure((got_macro - oracle_macro).abs() <= 1e-9, || format!("macro {got_macro} vs oracle {oracle_macro}"))?;
    ensure((got_weighted - oracle_weighted).abs() <= 1e-9, || format!("weighted {got_weighted} vs oracle"))?;
    Ok(format!("diagonal 1.0; fixture macro {got_macro:.10}"))
}

fn corpus_args(path: &Path) -> CorpusArgs {
    CorpusArgs { corpus: path.to_path_buf(), format: CorpusFormat::Jsonl, rules: None }
}

fn preprocess_args() -> PreprocessArgs {
    PreprocessArgs { stopwords: None, stem_rules: None, min_df: 2 }
}

fn training_args(seed: u64) -> TrainingArgs {
    TrainingArgs { seed, learning_rate: 0.05, epochs: 30, batch_size: 32, l2_lambda: 1e-4 }
}

fn synthetic_benchmark(dir: &Path) -> Outcome {
    let mut summary = Vec::new();
    for (noise, threshold) in [(0.0, 0.99), (0.2, 0.90)] {
        let path = dir.join(format!("synthetic-{noise}.jsonl"));
        let generated = cmd_gen_synthetic(&GenSyntheticArgs {
            task: Task::Decision,
            n_per_class: 500,
            noise,
            seed: 7,
            out: path.clone(),
            format: CorpusFormat::Jsonl,
        })
        .map_err(|e| e.to_string())?;
        ensure(generated.labels.values().all(|&n| n == 500) && generated.labels.len() == 3, || {
            format!("census {:?}", generated.labels)
        })?;
        let args = EvaluateArgs {
            corpus: corpus_args(&path),
            task: Task::Decision,
            preprocess: preprocess_args(),
            training: training_args(11),
            k: 5,
            balance: false,
            report_out: None,
            json: false,
        };
        let first = cmd_evaluate(&args).map_err(|e| e.to_string())?;
        let second = cmd_evaluate(&args).map_err(|e| e.to_string())?;
        ensure(first == second, || format!("noise {noise}: reports differ between identical runs"))?;
        ensure(first.mean_f1 >= threshold, || {
            format!("noise {noise}: weighted F1 {:.4} < {threshold}", first.mean_f1)
        })?;
        summary.push(format!("noise {noise}: F1 {:.4} (>= {threshold})", first.mean_f1));
    }
    Ok(summary.join("; "))
}

fn determinism(dir: &Path) -> Outcome {
    let corpus = dir.join("determinism.jsonl");
    cmd_gen_synthetic(&GenSyntheticArgs {
        task: Task::Decision,
        n_per_class: 200,
        noise: 0.1,
        seed: 3,
        out: corpus.clone(),
        format: CorpusFormat::Jsonl,
    })
    .map_err(|e| e.to_string())?;
    let train = |out: &str| {
        let args = TrainArgs {
            corpus: corpus_args(&corpus),
            task: Task::Decision,
            preprocess: preprocess_args(),
            training: training_args(5),
            balance: false,
            model_out: dir.join(out),
        };
        cmd_train(&args).map_err(|e| e.to_string())?;
        std::fs::read(dir.join(out)).map_err(|e| e.to_string())
    };
    let (a, b) = (train("a.model")?, train("b.model")?);
    ensure(a == b, || "model files differ between identical runs".into())?;

    let rules = LabelerRules::default();
    let (dataset, _) = prepare_dataset(
        Corpus::new(generate(Task::Decision, 200, 0.1, 3).map_err(|e| e.to_string())?),
        &rules,
        Task::Decision,
    );
    let bundle = train_bundle(&dataset, &PipelineConfig::with_seed(5), &rules.hash()).map_err(|e| e.to_string())?;
    ensure(save_model(&bundle) == a, || "in-memory bundle serializes differently from cmd_train output".into())?;
    let loaded = load_model(&a).map_err(|e| e.to_string())?;
    let probes = generate(Task::Decision, 34, 0.3, 77).map_err(|e| e.to_string())?;
    for record in probes.iter().take(100) {
        let p = bundle.predict_text(&record.description).map_err(|e| e.to_string())?.prediction;
        let q = loaded.predict_text(&record.description).map_err(|e| e.to_string())?.prediction;
        let same = p.label == q.label && p.scores.iter().zip(&q.scores).all(|(x, y)| x.to_bits() == y.to_bits());
        ensure(same, || format!("prediction differs after reload for {}", record.id))?;
    }
    Ok(format!("{} byte model identical twice; 100 probes bit-identical after reload", a.len()))
}

fn no_leakage() -> Outcome {
    let rules = LabelerRules::default();
    let (dataset, _) = prepare_dataset(
        Corpus::new(generate(Task::Decision, 120, 0.2, 13).map_err(|e| e.to_string())?),
        &rules,
        Task::Decision,
    );
    let config = PipelineConfig::with_seed(2);
    let cv = cross_validate_with_models(&dataset, &config, 5, 9).map_err(|e| e.to_string())?;
    let preprocessor = Preprocessor::new(config.preprocess.clone());
    for (fold, model) in cv.models.iter().enumerate() {
        let train_docs: Vec<Vec<String>> = cv
            .folds
            .train_indices(fold)
            .into_iter()
            .map(|i| preprocessor.process(&dataset.examples[i].text))
            .collect();
        let reference = TfidfModel::fit(&train_docs, config.min_df).map_err(|e| e.to_string())?;
        ensure(reference.vocabulary.terms() == model.tfidf.vocabulary.terms(), || {
            format!("fold {fold}: vocabulary differs from a train-only fit")
        })?;
        ensure(reference.idf == model.tfidf.idf, || format!("fold {fold}: idf differs from a train-only fit"))?;
    }
    Ok(format!("{} folds match train-only fits", cv.models.len()))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().to_path_buf();
    type Check = Box<dyn Fn() -> Outcome>;
    let criteria: Vec<(&str, u64, Check)> = vec![
        ("labeler goldens", 1, Box::new(labeler_goldens)),
        ("dataset arithmetic", 1, Box::new(dataset_arithmetic)),
        ("tf-idf oracle equivalence", 5, Box::new(tfidf_oracle)),
        ("gradient check", 10, Box::new(gradient_check)),
        ("stratification invariants", 5, Box::new(stratification)),
        ("f1 correctness", 1, Box::new(f1_correctness)),
        ("end-to-end synthetic benchmark", 60, Box::new({
            let p = path.clone();
            move || synthetic_benchmark(&p)
        })),
        ("determinism", 30, Box::new({
            let p = path.clone();
            move || determinism(&p)
        })),
        ("no-leakage", 10, Box::new(no_leakage)),
    ];

    let mut failures = 0;
    for (name, budget_s, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(&check))
            .unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let over_budget = elapsed > Duration::from_secs(budget_s);
        let line = match (&outcome, over_budget) {
            (Ok(detail), false) => format!("PASS  {name} [{:.2}s < {budget_s}s] {detail}", elapsed.as_secs_f64()),
            (Ok(detail), true) => {
                format!("FAIL  {name} [{:.2}s exceeds {budget_s}s] {detail}", elapsed.as_secs_f64())
            }
            (Err(e), _) => format!("FAIL  {name} [{:.2}s] {e}", elapsed.as_secs_f64()),
        };
        if line.starts_with("FAIL") {
            failures += 1;
        }
        println!("{line}");
    }
    println!("acceptance: {} failed", failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
