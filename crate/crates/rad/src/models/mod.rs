//! Probabilistic classifiers used for both the label-quality and the
//! classification role.
//!
//! - [`ProbVector`]: validated per-class probabilities, the currency of all
//!   selection and ensemble logic.
//! - [`Model`]: k-NN, nearest centroid, or a small feed-forward network
//!   behind one fit/predict/evaluate interface.
//! - [`Predictor`]: the read-only prediction facet, so selection logic can be
//!   driven by scripted stand-ins in tests.
//!
//! Classes absent from the training data always receive probability exactly
//! zero. Refits are from scratch and re-seeded, so a model fitted twice on
//! the same data is identical.

mod centroid;
pub(crate) mod knn;
mod mlp;

pub use centroid::CentroidState;
pub use knn::KnnState;
pub use mlp::MlpState;

use serde::{Deserialize, Serialize};

use crate::datastream::Dataset;
use crate::error::{RadError, Result};
use crate::scalar::Scalar;

/// Per-class probabilities: entries in [0, 1], summing to 1 within 1e-9.
///
/// Stored as `f64` regardless of the feature scalar type, so downstream
/// comparisons do not depend on storage precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Sum tolerance for the normalization invariant.
    pub const SUM_TOLERANCE: f64 = 1e-9;

    /// Validates and wraps a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(RadError::InvalidData("empty probability vector".into()));
        }
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(RadError::InvalidData(format!("probability outside [0,1]: {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(RadError::InvalidData(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(ProbVector(probs))
    }

    /// Uniform distribution over `k` classes.
    pub fn uniform(k: usize) -> Self {
        ProbVector(vec![1.0 / k as f64; k])
    }

    /// All mass on one class.
    pub fn one_hot(k: usize, class: usize) -> Self {
        let mut p = vec![0.0; k];
        p[class] = 1.0;
        ProbVector(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Predicted class: index of the largest probability, ties to the lowest
    /// index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Largest probability.
    pub fn max_prob(&self) -> f64 {
        self.0[self.argmax()]
    }

    /// Euclidean distance to another vector of the same width.
    pub fn euclidean_distance(&self, other: &ProbVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Population standard deviation of the entries; 0 for a flat vector is
    /// impossible (flat = 1/k everywhere gives exactly 0), so low values mean
    /// an undecided prediction.
    pub fn population_std(&self) -> f64 {
        let k = self.0.len() as f64;
        let mean = self.0.iter().sum::<f64>() / k;
        (self.0.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / k).sqrt()
    }
}

/// Model kind plus hyperparameters; serializable as part of experiment
/// configs and checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    /// k-nearest-neighbor voting; probabilities are neighbor class fractions.
    Knn { k: usize },
    /// Per-class mean prototypes; probabilities via softmax over negative
    /// Euclidean distances.
    NearestCentroid,
    /// Feed-forward ReLU network with a softmax head, trained by mini-batch
    /// SGD on cross-entropy.
    Mlp { hidden: Vec<usize>, epochs: usize, learning_rate: f64, minibatch: usize },
}

impl ModelConfig {
    /// Default label-quality model: 2 hidden layers of 28 units.
    pub fn default_label_model() -> Self {
        ModelConfig::Mlp { hidden: vec![28, 28], epochs: 100, learning_rate: 0.01, minibatch: 32 }
    }

    /// Default classifier: 5-nearest-neighbor voting.
    pub fn default_classifier() -> Self {
        ModelConfig::Knn { k: 5 }
    }

    /// Copy of this config with the epoch count replaced (no-op for models
    /// without epochs).
    pub fn with_epochs(&self, epochs: usize) -> Self {
        match self {
            ModelConfig::Mlp { hidden, learning_rate, minibatch, .. } => ModelConfig::Mlp {
                hidden: hidden.clone(),
                epochs,
                learning_rate: *learning_rate,
                minibatch: *minibatch,
            },
            other => other.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Knn { k } if *k == 0 => {
                Err(RadError::InvalidConfig("knn needs k >= 1".into()))
            }
            ModelConfig::Mlp { hidden, learning_rate, minibatch, .. } => {
                if hidden.iter().any(|&h| h == 0) {
                    return Err(RadError::InvalidConfig("mlp hidden widths must be >= 1".into()));
                }
                if !(learning_rate > &0.0) {
                    return Err(RadError::InvalidConfig("mlp learning rate must be > 0".into()));
                }
                if *minibatch == 0 {
                    return Err(RadError::InvalidConfig("mlp minibatch must be >= 1".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Read-only prediction interface; lets tests drive selection logic with
/// scripted predictions instead of fitted models.
pub trait Predictor<F: Scalar> {
    /// Class probabilities for one feature vector.
    fn predict_proba(&self, features: &[F]) -> Result<ProbVector>;

    /// Predicted class (argmax, ties to the lowest index).
    fn predict(&self, features: &[F]) -> Result<usize> {
        Ok(self.predict_proba(features)?.argmax())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum FittedState<F: Scalar> {
    Knn(KnnState<F>),
    Centroid(CentroidState<F>),
    Mlp(MlpState<F>),
}

/// Report returned by [`Model::fit`].
#[derive(Debug, Clone, Default)]
pub struct FitReport {
    /// Mean training cross-entropy per epoch (networks only; empty otherwise).
    pub epoch_losses: Vec<f64>,
    /// Number of instances the model was fitted on.
    pub training_size: usize,
}

/// Report returned by [`Model::evaluate`].
#[derive(Debug, Clone)]
pub struct EvalReport {
    /// Fraction of test instances whose predicted class equals the truth.
    pub accuracy: f64,
    /// Unweighted mean of per-class F1 scores.
    pub macro_f1: f64,
    /// Confusion counts: `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

/// A classifier with one of the supported backends.
///
/// `fit` always retrains from scratch, re-seeded from `init_seed`, so model
/// parameters depend only on (config, seed, training data) — never on fit
/// history. `evaluate` stores the measured accuracy, which the ensemble later
/// reads as its confidence weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model<F: Scalar> {
    config: ModelConfig,
    init_seed: u64,
    state: Option<FittedState<F>>,
    last_test_accuracy: Option<f64>,
}

/// Version tag for serialized model blobs.
const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelBlob<F: Scalar> {
    version: u32,
    model: Model<F>,
}

impl<F: Scalar> Model<F> {
    /// New unfitted model. The seed fixes the network initialization and the
    /// epoch shuffling; k-NN and centroid ignore it.
    pub fn new(config: ModelConfig, init_seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Model { config, init_seed, state: None, last_test_accuracy: None })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn is_fitted(&self) -> bool {
        self.state.is_some()
    }

    /// Accuracy stored by the most recent [`Model::evaluate`].
    pub fn last_test_accuracy(&self) -> Option<f64> {
        self.last_test_accuracy
    }

    /// Fits from scratch on `data`. An empty training set returns
    /// [`RadError::EmptyTrainingSet`] and leaves any previous fit untouched,
    /// so callers keep predicting with the old model.
    pub fn fit(&mut self, data: &Dataset<F>) -> Result<FitReport> {
        if data.is_empty() {
            return Err(RadError::EmptyTrainingSet);
        }
        let mut report = FitReport { epoch_losses: Vec::new(), training_size: data.len() };
        let state = match &self.config {
            ModelConfig::Knn { k } => FittedState::Knn(KnnState::fit(*k, data)),
            ModelConfig::NearestCentroid => FittedState::Centroid(CentroidState::fit(data)),
            ModelConfig::Mlp { hidden, epochs, learning_rate, minibatch } => {
                let (state, losses) = MlpState::fit(
                    data,
                    hidden,
                    *epochs,
                    *learning_rate,
                    *minibatch,
                    self.init_seed,
                );
                report.epoch_losses = losses;
                FittedState::Mlp(state)
            }
        };
        self.state = Some(state);
        Ok(report)
    }

    fn fitted(&self) -> Result<&FittedState<F>> {
        self.state.as_ref().ok_or(RadError::NotFitted)
    }

    /// Feature width the model was fitted with.
    fn fitted_width(state: &FittedState<F>) -> usize {
        match state {
            FittedState::Knn(s) => s.n_features(),
            FittedState::Centroid(s) => s.n_features(),
            FittedState::Mlp(s) => s.n_features(),
        }
    }

    /// Evaluates on a test set against true labels, storing the accuracy for
    /// later use as the ensemble confidence weight.
    pub fn evaluate(&mut self, test: &Dataset<F>) -> Result<EvalReport> {
        if test.is_empty() {
            return Err(RadError::InvalidData("empty test set".into()));
        }
        let k = test.n_classes;
        let mut preds = Vec::with_capacity(test.len());
        let mut truths = Vec::with_capacity(test.len());
        for inst in &test.instances {
            preds.push(self.predict(&inst.features)?);
            truths.push(inst.true_label);
        }
        let confusion = crate::harness::metrics::confusion_counts(&preds, &truths, k);
        let accuracy = crate::harness::metrics::accuracy_from_confusion(&confusion);
        let macro_f1 = crate::harness::metrics::macro_f1_from_confusion(&confusion);
        self.last_test_accuracy = Some(accuracy);
        Ok(EvalReport { accuracy, macro_f1, confusion })
    }

    /// Serializes the full model (config, seed, fitted parameters) to a
    /// versioned JSON blob.
    pub fn to_json(&self) -> Result<String>
    where
        F: serde::Serialize,
    {
        let blob = ModelBlob { version: MODEL_FORMAT_VERSION, model: self.clone() };
        Ok(serde_json::to_string(&blob)?)
    }

    /// Restores a model serialized by [`Model::to_json`].
    pub fn from_json(json: &str) -> Result<Self>
    where
        F: serde::de::DeserializeOwned,
    {
        let blob: ModelBlob<F> = serde_json::from_str(json)?;
        if blob.version != MODEL_FORMAT_VERSION {
            return Err(RadError::UnsupportedVersion {
                found: blob.version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        Ok(blob.model)
    }
}

impl<F: Scalar> Predictor<F> for Model<F> {
    fn predict_proba(&self, features: &[F]) -> Result<ProbVector> {
        let state = self.fitted()?;
        let width = Self::fitted_width(state);
        if features.len() != width {
            return Err(RadError::InvalidData(format!(
                "feature width {} does not match fitted width {width}",
                features.len()
            )));
        }
        let probs = match state {
            FittedState::Knn(s) => s.predict_proba(features),
            FittedState::Centroid(s) => s.predict_proba(features),
            FittedState::Mlp(s) => s.predict_proba(features),
        };
        ProbVector::new(probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastream::{make_synthetic, Instance};

    fn tiny_dataset(k: usize, f: usize, labels: &[usize]) -> Dataset<f64> {
        let mut ds = Dataset::new(f, k);
        for (i, &label) in labels.iter().enumerate() {
            let features = (0..f).map(|j| (i * f + j) as f64 * 0.1).collect();
            ds.push(Instance { id: i, features, given_label: label, true_label: label }).unwrap();
        }
        ds
    }

    #[test]
    fn prob_vector_validates() {
        assert!(ProbVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbVector::new(vec![]).is_err());
        assert!(ProbVector::new(vec![0.6, 0.6]).is_err());
        assert!(ProbVector::new(vec![1.2, -0.2]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.499]).is_err());
        // Within tolerance passes.
        assert!(ProbVector::new(vec![0.5, 0.5 - 5e-10]).is_ok());
    }

    #[test]
    fn prob_vector_argmax_breaks_ties_low() {
        let p = ProbVector::new(vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        assert_eq!(p.argmax(), 0);
        let p = ProbVector::new(vec![0.2, 0.4, 0.4]).unwrap();
        assert_eq!(p.argmax(), 1);
    }

    #[test]
    fn prob_vector_std_and_distance() {
        let flat = ProbVector::uniform(4);
        assert!(flat.population_std().abs() < 1e-15);
        let peaked = ProbVector::one_hot(4, 2);
        assert!(peaked.population_std() > 0.4);
        let d = flat.euclidean_distance(&peaked);
        let expected = (3.0 * 0.0625 + 0.5625f64).sqrt();
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn unfitted_model_refuses_to_predict() {
        let model = Model::<f64>::new(ModelConfig::default_classifier(), 0).unwrap();
        assert!(matches!(model.predict_proba(&[0.0, 0.0]), Err(RadError::NotFitted)));
    }

    #[test]
    fn empty_fit_keeps_previous_state() {
        let data = tiny_dataset(2, 2, &[0, 0, 1, 1]);
        let mut model = Model::new(ModelConfig::Knn { k: 1 }, 0).unwrap();
        model.fit(&data).unwrap();
        let before = model.predict_proba(&[0.0, 0.1]).unwrap();
        let err = model.fit(&Dataset::new(2, 2)).unwrap_err();
        assert!(matches!(err, RadError::EmptyTrainingSet));
        assert!(model.is_fitted());
        assert_eq!(model.predict_proba(&[0.0, 0.1]).unwrap(), before);
    }

    #[test]
    fn feature_width_is_checked() {
        let data = tiny_dataset(2, 3, &[0, 1]);
        let mut model = Model::new(ModelConfig::Knn { k: 1 }, 0).unwrap();
        model.fit(&data).unwrap();
        assert!(model.predict_proba(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn evaluate_counts_and_stores_accuracy() {
        // Constant-class predictor on a balanced 4-class test set: 0.25.
        let mut train = Dataset::new(1, 4);
        train
            .push(Instance { id: 0, features: vec![0.0], given_label: 2, true_label: 2 })
            .unwrap();
        let mut model = Model::new(ModelConfig::Knn { k: 1 }, 0).unwrap();
        model.fit(&train).unwrap();
        let mut test = Dataset::new(1, 4);
        for i in 0..40 {
            test.push(Instance {
                id: i,
                features: vec![i as f64],
                given_label: i % 4,
                true_label: i % 4,
            })
            .unwrap();
        }
        let report = model.evaluate(&test).unwrap();
        assert!((report.accuracy - 0.25).abs() < 1e-12);
        assert_eq!(model.last_test_accuracy(), Some(report.accuracy));
        // Perfect model scores 1.0: 1-NN fitted on the test set itself.
        let mut perfect = Model::new(ModelConfig::Knn { k: 1 }, 0).unwrap();
        perfect.fit(&test).unwrap();
        let report = perfect.evaluate(&test).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f1, 1.0);
    }

    #[test]
    fn evaluate_matches_a_manual_recount() {
        let train = make_synthetic::<f64>(3, 4, 120, 0.6, 5).unwrap();
        let test = make_synthetic::<f64>(3, 4, 50, 0.6, 6).unwrap();
        let mut model = Model::new(ModelConfig::NearestCentroid, 0).unwrap();
        model.fit(&train).unwrap();
        let report = model.evaluate(&test).unwrap();
        let mut hits = 0;
        for inst in &test.instances {
            if model.predict(&inst.features).unwrap() == inst.true_label {
                hits += 1;
            }
        }
        assert!((report.accuracy - hits as f64 / 50.0).abs() < 1e-12);
    }

    #[test]
    fn all_kinds_produce_valid_probabilities() {
        let train = make_synthetic::<f32>(4, 6, 200, 0.8, 9).unwrap();
        let probe = make_synthetic::<f32>(4, 6, 50, 1.5, 10).unwrap();
        for config in [
            ModelConfig::Knn { k: 5 },
            ModelConfig::NearestCentroid,
            ModelConfig::Mlp { hidden: vec![8], epochs: 5, learning_rate: 0.01, minibatch: 16 },
        ] {
            let mut model = Model::new(config, 1).unwrap();
            model.fit(&train).unwrap();
            for inst in &probe.instances {
                // ProbVector::new re-validates range and normalization.
                let p = model.predict_proba(&inst.features).unwrap();
                assert_eq!(p.len(), 4);
            }
        }
    }

    #[test]
    fn missing_classes_get_exact_zero() {
        // Train with class 2 absent out of K=3.
        let data = tiny_dataset(3, 2, &[0, 0, 1, 1]);
        for config in [
            ModelConfig::Knn { k: 3 },
            ModelConfig::NearestCentroid,
            ModelConfig::Mlp { hidden: vec![4], epochs: 3, learning_rate: 0.01, minibatch: 2 },
        ] {
            let mut model = Model::new(config, 7).unwrap();
            model.fit(&data).unwrap();
            let p = model.predict_proba(&[0.05, 0.15]).unwrap();
            assert_eq!(p.probs()[2], 0.0, "{:?}", model.config());
        }
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let train = make_synthetic::<f32>(3, 5, 150, 0.5, 2).unwrap();
        let probe = make_synthetic::<f32>(3, 5, 30, 1.0, 3).unwrap();
        for config in [
            ModelConfig::Knn { k: 5 },
            ModelConfig::NearestCentroid,
            ModelConfig::Mlp { hidden: vec![6, 6], epochs: 4, learning_rate: 0.01, minibatch: 8 },
        ] {
            let mut model = Model::new(config, 3).unwrap();
            model.fit(&train).unwrap();
            let json = model.to_json().unwrap();
            let restored = Model::<f32>::from_json(&json).unwrap();
            for inst in &probe.instances {
                assert_eq!(
                    model.predict_proba(&inst.features).unwrap(),
                    restored.predict_proba(&inst.features).unwrap()
                );
            }
        }
    }

    #[test]
    fn json_version_is_checked() {
        let mut model = Model::<f64>::new(ModelConfig::NearestCentroid, 0).unwrap();
        model.fit(&tiny_dataset(2, 2, &[0, 1])).unwrap();
        let json = model.to_json().unwrap().replace("\"version\":1", "\"version\":9");
        assert!(matches!(
            Model::<f64>::from_json(&json),
            Err(RadError::UnsupportedVersion { found: 9, expected: 1 })
        ));
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        assert!(Model::<f64>::new(ModelConfig::Knn { k: 0 }, 0).is_err());
        assert!(Model::<f64>::new(
            ModelConfig::Mlp { hidden: vec![0], epochs: 1, learning_rate: 0.01, minibatch: 1 },
            0
        )
        .is_err());
        assert!(Model::<f64>::new(
            ModelConfig::Mlp { hidden: vec![4], epochs: 1, learning_rate: 0.0, minibatch: 1 },
            0
        )
        .is_err());
    }
}
