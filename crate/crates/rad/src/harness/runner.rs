//! Experiment orchestration: streams batches, drives the selection scheme
//! and baselines over the same noise realization, retrains per each kind's
//! contract, and records per-batch metrics.

use serde::{Deserialize, Serialize};

use crate::datastream::csv_io::{load_csv, CsvSchema};
use crate::datastream::{
    derive_seed, make_synthetic, stream_batches, BatchStream, Dataset, Instance, StreamSpec,
};
use crate::ensemble::{ensemble_predict, EnsembleWeights};
use crate::error::{RadError, Result};
use crate::harness::config::{DataSource, ExperimentConfig, Precision, RunKind};
use crate::harness::knn_cache::KnnTestCache;
use crate::harness::metrics::{
    accuracy_from_confusion, compute_hot_metrics, confusion_counts, macro_f1_from_confusion,
    BatchTally,
};
use crate::models::{Model, ModelConfig, Predictor, ProbVector};
use crate::oracle::{preselect_random, Oracle, TranscriptEntry};
use crate::scalar::Scalar;
use crate::selection::{
    select_active, select_basic, select_slim, select_voting, InactiveList, SelectionOutcome,
};

/// Per-batch measurements of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// 1-based streamed batch index (the initial clean batch is batch 0 and
    /// has no row).
    pub batch_index: usize,
    /// Accuracy of the run's reported predictions on the clean test set —
    /// the ensemble's, or the classifier's for classifier-only kinds.
    pub accuracy: f64,
    /// Test accuracy of the label-quality model (absent for kinds that have
    /// none).
    pub accuracy_label_model: Option<f64>,
    /// Test accuracy of the classifier.
    pub accuracy_classifier: f64,
    /// Macro-averaged F1 of the reported predictions.
    pub f1_macro: f64,
    /// Fraction of streamed instances admitted to training so far (the
    /// initial clean batch excluded).
    pub hot_a: f64,
    /// Fraction of admitted instances whose final labels are truly clean;
    /// `None` until anything has been admitted.
    pub hot_truth_at: Option<f64>,
    /// Oracle queries answered during this batch.
    pub queries_used: usize,
    /// Oracle queries answered so far in this run.
    pub total_queries: usize,
    /// Instances the models were trained on at this batch: the accumulated
    /// pool for accumulating kinds, this batch's admissions for the
    /// per-batch kinds.
    pub cumulative_training_size: usize,
}

/// One (kind, seed) run: its per-batch records and oracle transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeries {
    pub kind: RunKind,
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
    /// Every oracle query this run made, in order.
    pub transcript: Vec<TranscriptEntry>,
}

/// All runs of one experiment: the scheme plus every configured baseline,
/// for every seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub runs: Vec<RunSeries>,
}

impl ExperimentResults {
    /// Runs of one kind, across seeds, in seed order.
    pub fn runs_of(&self, kind: RunKind) -> Vec<&RunSeries> {
        self.runs.iter().filter(|r| r.kind == kind).collect()
    }

    /// Mean over seeds of a final-batch statistic for one kind.
    pub fn final_mean(&self, kind: RunKind, stat: impl Fn(&MetricsRecord) -> f64) -> Option<f64> {
        let finals: Vec<f64> =
            self.runs_of(kind).iter().filter_map(|r| r.records.last()).map(&stat).collect();
        if finals.is_empty() {
            None
        } else {
            Some(finals.iter().sum::<f64>() / finals.len() as f64)
        }
    }
}

/// Runs the configured scheme plus baselines for every seed. Within a seed,
/// every kind consumes the identical stream — the same shuffle and the same
/// noise realization — so comparisons are paired.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    match config.precision {
        Precision::F32 => run_typed::<f32>(config),
        Precision::F64 => run_typed::<f64>(config),
    }
}

fn run_typed<F: Scalar>(config: &ExperimentConfig) -> Result<ExperimentResults> {
    let mut runs = Vec::new();
    for &seed in &config.seeds {
        let stream = build_stream::<F>(config, seed)?;
        for kind in std::iter::once(config.scheme).chain(config.baselines.iter().copied()) {
            log::info!("run: kind={kind} seed={seed}");
            runs.push(run_single::<F>(config, kind, seed, &stream)?);
        }
    }
    Ok(ExperimentResults { config: config.clone(), runs })
}

/// Builds the batch stream one seed sees: synthetic sources draw a fresh
/// dataset per seed; CSV sources re-split the same file per seed.
pub fn build_stream<F: Scalar>(config: &ExperimentConfig, seed: u64) -> Result<BatchStream<F>> {
    let dataset: Dataset<F> = match &config.data {
        DataSource::Synthetic { k_classes, n_features, cluster_spread } => {
            let n_batches = config.n_batches.expect("validated: synthetic has n_batches");
            let total = config.d0_size + config.test_size + n_batches * config.batch_size;
            make_synthetic(*k_classes, *n_features, total, *cluster_spread, derive_seed(seed, "data"))?
        }
        DataSource::Csv { path, label_column, feature_columns, classes } => {
            let schema = CsvSchema {
                label_column: label_column.clone(),
                feature_columns: feature_columns.clone(),
                classes: classes.clone(),
            };
            load_csv(path, &schema)?.dataset
        }
    };
    let spec = StreamSpec {
        d0_size: config.d0_size,
        batch_size: config.batch_size,
        test_size: config.test_size,
        noise_level: config.noise_level,
        seed,
        shuffle: config.shuffle,
    };
    let mut stream = stream_batches(dataset, &spec)?;
    if let Some(n) = config.n_batches {
        if stream.batches.len() < n {
            return Err(RadError::InvalidConfig(format!(
                "source provides {} full batches, config expects {n}",
                stream.batches.len()
            )));
        }
        stream.batches.truncate(n);
    }
    Ok(stream)
}

/// Admission order into the training pool; also the row order the k-NN
/// evaluation cache sees, so it must stay in lockstep with `admitted()`.
fn admitted_in_order<F: Scalar>(outcome: &SelectionOutcome<F>) -> Vec<Instance<F>> {
    outcome.admitted().cloned().collect()
}

fn predict_all<F: Scalar>(model: &Model<F>, test: &Dataset<F>) -> Result<Vec<ProbVector>> {
    test.instances.iter().map(|inst| model.predict_proba(&inst.features)).collect()
}

fn accuracy_of(probs: &[ProbVector], truths: &[usize]) -> f64 {
    let hits = probs.iter().zip(truths).filter(|(p, &t)| p.argmax() == t).count();
    hits as f64 / truths.len() as f64
}

/// Runs one kind over one already-built stream.
pub fn run_single<F: Scalar>(
    config: &ExperimentConfig,
    kind: RunKind,
    seed: u64,
    stream: &BatchStream<F>,
) -> Result<RunSeries> {
    let n_classes = stream.k_classes;
    let test = &stream.test_set;
    let truths: Vec<usize> = test.instances.iter().map(|i| i.true_label).collect();
    let budget = config.resolved_budget();
    let per_batch = kind.classifier_only() && kind != RunKind::Ids; // slim kinds
    let uses_label_model = !matches!(kind, RunKind::Slim | RunKind::SlimLimited);

    // The per-batch retraining contract pins the epoch count to 60; the
    // accumulating kinds use the configured hyperparameters unchanged.
    let classifier_config = if per_batch {
        config.classifier_model.with_epochs(60)
    } else {
        config.classifier_model.clone()
    };
    let mut classifier =
        Model::<F>::new(classifier_config.clone(), derive_seed(config.init_seed, "classifier"))?;
    let mut label_model = if uses_label_model {
        Some(Model::<F>::new(config.label_model.clone(), derive_seed(config.init_seed, "label"))?)
    } else {
        None
    };

    // Batch 0: fit on the clean head batch.
    let mut pool = stream.d0.clone();
    if let Some(label_model) = &mut label_model {
        label_model.fit(&pool)?;
    }
    classifier.fit(&pool)?;

    // Incremental k-NN test evaluation for kinds whose pool only grows.
    let make_cache = |config: &ModelConfig| -> Option<KnnTestCache<F>> {
        match config {
            ModelConfig::Knn { k } if !per_batch => {
                let mut cache = KnnTestCache::new(*k, test);
                cache.extend(&pool.instances);
                Some(cache)
            }
            _ => None,
        }
    };
    let mut clf_cache = make_cache(&classifier_config);
    // The frozen-label kind never refits its label model, so its test
    // predictions are a reusable constant instead of a cache.
    let mut label_cache = if uses_label_model && kind != RunKind::Ids {
        make_cache(&config.label_model)
    } else {
        None
    };
    let cached_test_probs = |cache: &Option<KnnTestCache<F>>, model: &Model<F>| -> Result<Vec<ProbVector>> {
        match cache {
            Some(cache) => Ok(cache.probs()),
            None => predict_all(model, test),
        }
    };

    // Bootstrap confidence weights from the batch-0 models.
    let frozen_label_probs = match &label_model {
        Some(model) => Some(cached_test_probs(&label_cache, model)?),
        None => None,
    };
    let mut alpha = EnsembleWeights {
        alpha_label: frozen_label_probs.as_ref().map(|p| accuracy_of(p, &truths)).unwrap_or(0.0),
        alpha_classifier: accuracy_of(&cached_test_probs(&clf_cache, &classifier)?, &truths),
    };
    // IDS freezes the label model after batch 0; its test predictions are a
    // constant reused every batch.
    let frozen_label_probs =
        if kind == RunKind::Ids { frozen_label_probs } else { None };

    let oracle_limit = match kind {
        RunKind::ActiveLimited | RunKind::SlimLimited | RunKind::PreselectOracle => budget,
        _ => None,
    };
    let mut oracle = Oracle::new(oracle_limit);
    let mut inactive = InactiveList::new();
    let mut tallies: Vec<BatchTally> = Vec::with_capacity(stream.batches.len());
    let mut records = Vec::with_capacity(stream.batches.len());

    for (offset, batch) in stream.batches.iter().enumerate() {
        let batch_index = offset + 1;
        oracle.begin_batch(batch_index);
        let batch = &batch.instances;

        let outcome: SelectionOutcome<F> = match kind {
            RunKind::Basic => select_basic(batch, label_model.as_ref().expect("has label model"))?,
            RunKind::Voting => select_voting(
                batch,
                batch_index,
                label_model.as_ref().expect("has label model"),
                &classifier,
                &mut inactive,
                config.r,
            )?,
            RunKind::Active | RunKind::ActiveLimited => select_active(
                batch,
                label_model.as_ref().expect("has label model"),
                &classifier,
                &mut oracle,
                if kind == RunKind::ActiveLimited { budget } else { None },
            )?,
            RunKind::Slim | RunKind::SlimLimited => select_slim(
                batch,
                &classifier,
                &mut oracle,
                if kind == RunKind::SlimLimited { budget } else { None },
            )?,
            RunKind::NoSel => {
                SelectionOutcome { cleansed: batch.to_vec(), ..SelectionOutcome::default() }
            }
            RunKind::OptSel => {
                let mut out = SelectionOutcome::default();
                for inst in batch {
                    if inst.is_clean() {
                        out.cleansed.push(inst.clone());
                    } else {
                        out.discarded.push(inst.id);
                    }
                }
                out
            }
            RunKind::FullClean => {
                let mut out = SelectionOutcome::default();
                for inst in batch {
                    let mut restored = inst.clone();
                    restored.given_label = restored.true_label;
                    out.cleansed.push(restored);
                }
                out
            }
            RunKind::Ids => select_basic(batch, label_model.as_ref().expect("has label model"))?,
            RunKind::PreselectOracle => {
                let n_lim = budget.expect("validated: preselect_oracle has n_lim");
                let picks = preselect_random(
                    batch.len(),
                    n_lim.min(batch.len()),
                    derive_seed(seed, &format!("preselect-{batch_index}")),
                )?;
                let mut out = SelectionOutcome::default();
                let mut picked = vec![false; batch.len()];
                for &p in &picks {
                    picked[p] = true;
                }
                for (inst, &picked) in batch.iter().zip(&picked) {
                    if picked {
                        let mut inst = inst.clone();
                        let answer = oracle.query_one(&inst).expect("within per-batch budget");
                        inst.given_label = answer;
                        out.corrected.push(inst);
                    } else {
                        out.cleansed.push(inst.clone());
                    }
                }
                out.queries_used = out.corrected.len();
                out
            }
        };

        // Retrain per the kind's contract.
        let admitted = admitted_in_order(&outcome);
        let training_size;
        if per_batch {
            if admitted.is_empty() {
                log::warn!("{kind} batch {batch_index}: nothing admitted, model retained");
                training_size = 0;
            } else {
                let mut current = Dataset::new(test.n_features, n_classes);
                for inst in &admitted {
                    current.push(inst.clone())?;
                }
                classifier.fit(&current)?;
                training_size = current.len();
            }
        } else {
            if admitted.is_empty() {
                log::warn!("{kind} batch {batch_index}: nothing admitted, models retained");
            } else {
                for inst in &admitted {
                    pool.push(inst.clone())?;
                }
                if kind != RunKind::Ids {
                    if let Some(label_model) = &mut label_model {
                        label_model.fit(&pool)?;
                    }
                }
                classifier.fit(&pool)?;
                if let Some(cache) = &mut clf_cache {
                    cache.extend(&admitted);
                }
                if let Some(cache) = &mut label_cache {
                    cache.extend(&admitted);
                }
            }
            training_size = pool.len();
        }

        // Evaluate the current models on the clean test set.
        let label_probs: Option<Vec<ProbVector>> = match (&frozen_label_probs, &label_model) {
            (Some(frozen), _) => Some(frozen.clone()),
            (None, Some(model)) => Some(cached_test_probs(&label_cache, model)?),
            (None, None) => None,
        };
        let clf_probs = cached_test_probs(&clf_cache, &classifier)?;
        let accuracy_label_model = label_probs.as_ref().map(|p| accuracy_of(p, &truths));
        let accuracy_classifier = accuracy_of(&clf_probs, &truths);

        // Predict: ensemble weighted by the PREVIOUS round's accuracies, or
        // classifier-only for the kinds that skip the ensemble.
        let preds: Vec<usize> = if kind.classifier_only() {
            clf_probs.iter().map(ProbVector::argmax).collect()
        } else {
            ensemble_predict(label_probs.as_ref().expect("ensemble kinds have both"), &clf_probs, &alpha)?
        };
        let confusion = confusion_counts(&preds, &truths, n_classes);
        let accuracy = accuracy_from_confusion(&confusion);
        let f1_macro = macro_f1_from_confusion(&confusion);
        alpha = EnsembleWeights {
            alpha_label: accuracy_label_model.unwrap_or(0.0),
            alpha_classifier: accuracy_classifier,
        };

        // Admission bookkeeping (oracle corrections are tracked separately
        // and never count toward the admitted-data ratios).
        let kept = outcome.cleansed.len() + outcome.promoted_cleansed.len();
        let rescued = outcome.rescued.len() + outcome.promoted_rescued.len();
        let truly_clean = outcome
            .cleansed
            .iter()
            .chain(&outcome.rescued)
            .chain(&outcome.promoted_cleansed)
            .chain(&outcome.promoted_rescued)
            .filter(|inst| inst.is_clean())
            .count();
        tallies.push(BatchTally { batch_size: batch.len(), kept, rescued, truly_clean });
        let hot = compute_hot_metrics(&tallies)?;

        records.push(MetricsRecord {
            batch_index,
            accuracy,
            accuracy_label_model,
            accuracy_classifier,
            f1_macro,
            hot_a: hot.a,
            hot_truth_at: hot.a_truth,
            queries_used: outcome.queries_used,
            total_queries: oracle.total_queries(),
            cumulative_training_size: training_size,
        });
    }

    Ok(RunSeries { kind, seed, records, transcript: oracle.transcript().to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::BudgetSpec;
    use std::path::PathBuf;

    fn knn_config(scheme: RunKind, baselines: Vec<RunKind>) -> ExperimentConfig {
        ExperimentConfig {
            version: 1,
            data: DataSource::Synthetic { k_classes: 3, n_features: 4, cluster_spread: 0.6 },
            d0_size: 90,
            batch_size: 45,
            test_size: 90,
            n_batches: Some(4),
            noise_level: 0.3,
            scheme,
            baselines,
            label_model: ModelConfig::Knn { k: 3 },
            classifier_model: ModelConfig::Knn { k: 5 },
            r: 2,
            n_lim: Some(BudgetSpec::Fraction(0.2)),
            seeds: vec![11, 12],
            init_seed: 0,
            precision: Precision::F32,
            shuffle: true,
            output_dir: PathBuf::from("runs"),
        }
    }

    #[test]
    fn every_kind_completes_and_counts_are_consistent() {
        let config = knn_config(
            RunKind::ActiveLimited,
            vec![
                RunKind::NoSel,
                RunKind::OptSel,
                RunKind::FullClean,
                RunKind::Ids,
                RunKind::PreselectOracle,
            ],
        );
        let results = run_experiment(&config).unwrap();
        assert_eq!(results.runs.len(), 6 * 2, "kinds x seeds");
        for run in &results.runs {
            assert_eq!(run.records.len(), 4);
            let budget = config.resolved_budget().unwrap();
            let mut last_size = 0;
            for record in &run.records {
                assert!((0.0..=1.0).contains(&record.accuracy));
                assert!((0.0..=1.0).contains(&record.f1_macro));
                assert!((0.0..=1.0).contains(&record.hot_a));
                if let Some(at) = record.hot_truth_at {
                    assert!((0.0..=1.0).contains(&at));
                }
                match run.kind {
                    RunKind::ActiveLimited | RunKind::PreselectOracle => {
                        assert!(record.queries_used <= budget)
                    }
                    _ => assert_eq!(record.queries_used, 0),
                }
                assert!(record.cumulative_training_size >= last_size, "pool only grows");
                last_size = record.cumulative_training_size;
            }
            assert_eq!(
                run.records.last().unwrap().total_queries,
                run.transcript.len(),
                "transcript covers every answered query"
            );
        }
    }

    #[test]
    fn no_sel_admits_everything_and_full_clean_is_all_clean() {
        let config = knn_config(RunKind::Basic, vec![RunKind::NoSel, RunKind::FullClean]);
        let results = run_experiment(&config).unwrap();
        for run in results.runs_of(RunKind::NoSel) {
            let last = run.records.last().unwrap();
            assert_eq!(last.hot_a, 1.0);
            // Noise is 30%: admitted-but-dirty labels drag A^T below 1.
            assert!(last.hot_truth_at.unwrap() < 1.0);
        }
        for run in results.runs_of(RunKind::FullClean) {
            let last = run.records.last().unwrap();
            assert_eq!(last.hot_a, 1.0);
            assert_eq!(last.hot_truth_at, Some(1.0), "labels restored to truth");
        }
    }

    #[test]
    fn opt_sel_only_admits_truly_clean() {
        let config = knn_config(RunKind::Basic, vec![RunKind::OptSel]);
        let results = run_experiment(&config).unwrap();
        for run in results.runs_of(RunKind::OptSel) {
            for record in &run.records {
                assert_eq!(record.hot_truth_at, Some(1.0));
            }
            let last = run.records.last().unwrap();
            assert!(last.hot_a < 1.0, "noise was filtered out");
        }
    }

    #[test]
    fn identical_config_and_seed_reproduce_identical_records() {
        let config = knn_config(RunKind::Voting, vec![RunKind::PreselectOracle]);
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a.runs, b.runs);
    }

    #[test]
    fn slim_training_size_is_per_batch() {
        let mut config = knn_config(RunKind::Slim, vec![]);
        config.n_lim = None;
        let results = run_experiment(&config).unwrap();
        for run in &results.runs {
            for record in &run.records {
                assert!(
                    record.cumulative_training_size <= config.batch_size,
                    "slim trains on the current batch only"
                );
            }
        }
    }

    #[test]
    fn unlimited_active_admits_or_corrects_every_instance() {
        let mut config = knn_config(RunKind::Active, vec![]);
        config.n_lim = None;
        let results = run_experiment(&config).unwrap();
        for run in &results.runs {
            let last = run.records.last().unwrap();
            let streamed = 4 * config.batch_size;
            let admitted = (last.hot_a * streamed as f64).round() as usize;
            assert_eq!(admitted + last.total_queries, streamed, "no residue");
        }
    }
}
