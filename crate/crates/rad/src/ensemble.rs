//! Accuracy-weighted two-model ensemble.
//!
//! The label-quality model and the classifier each produce a probability
//! vector for a test instance. When their argmax classes agree, that class is
//! the prediction. When they disagree, each side's confidence (its largest
//! probability) is scaled by that model's most recent test accuracy, and the
//! larger product wins; exact ties go to the label-quality model.
//!
//! The accuracies used as weights are the ones measured for the models of the
//! *previous* round, so a prediction never uses information produced after
//! the models that made it.

use serde::{Deserialize, Serialize};

use crate::error::{RadError, Result};
use crate::models::ProbVector;

/// Per-model confidence weights: the test accuracies measured for the models
/// of the previous round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights {
    /// Test accuracy of the label-quality model.
    pub alpha_label: f64,
    /// Test accuracy of the classifier.
    pub alpha_classifier: f64,
}

impl EnsembleWeights {
    /// Validates that both weights are accuracies in [0, 1].
    pub fn new(alpha_label: f64, alpha_classifier: f64) -> Result<Self> {
        for (name, a) in [("alpha_label", alpha_label), ("alpha_classifier", alpha_classifier)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(RadError::InvalidData(format!(
                    "{name} must be an accuracy in [0,1], got {a}"
                )));
            }
        }
        Ok(EnsembleWeights { alpha_label, alpha_classifier })
    }
}

/// Combines one pair of predictions.
///
/// Returns the shared argmax when the models agree; otherwise the
/// classifier's class iff
/// `alpha_classifier * max(classifier) > alpha_label * max(label)`
/// (strictly), and the label-quality model's class on ties or when its
/// weighted confidence is at least as large.
pub fn ensemble_predict_one(
    label: &ProbVector,
    classifier: &ProbVector,
    weights: &EnsembleWeights,
) -> Result<usize> {
    if label.len() != classifier.len() {
        return Err(RadError::InvalidData(format!(
            "ensemble inputs over different class counts: {} vs {}",
            label.len(),
            classifier.len()
        )));
    }
    let label_class = label.argmax();
    let classifier_class = classifier.argmax();
    if label_class == classifier_class {
        return Ok(label_class);
    }
    let label_score = weights.alpha_label * label.max_prob();
    let classifier_score = weights.alpha_classifier * classifier.max_prob();
    Ok(if classifier_score > label_score { classifier_class } else { label_class })
}

/// Combines predictions for a whole test set; the two slices must pair up
/// one-to-one.
pub fn ensemble_predict(
    label: &[ProbVector],
    classifier: &[ProbVector],
    weights: &EnsembleWeights,
) -> Result<Vec<usize>> {
    if label.len() != classifier.len() {
        return Err(RadError::InvalidData(format!(
            "ensemble input lengths differ: {} label predictions vs {} classifier predictions",
            label.len(),
            classifier.len()
        )));
    }
    label
        .iter()
        .zip(classifier)
        .map(|(l, c)| ensemble_predict_one(l, c, weights))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pv(probs: &[f64]) -> ProbVector {
        ProbVector::new(probs.to_vec()).unwrap()
    }

    fn w(l: f64, c: f64) -> EnsembleWeights {
        EnsembleWeights::new(l, c).unwrap()
    }

    #[test]
    fn weights_must_be_accuracies() {
        assert!(EnsembleWeights::new(0.0, 1.0).is_ok());
        assert!(EnsembleWeights::new(-0.1, 0.5).is_err());
        assert!(EnsembleWeights::new(0.5, 1.1).is_err());
        assert!(EnsembleWeights::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn agreement_wins_regardless_of_weights() {
        let l = pv(&[0.1, 0.8, 0.1]);
        let c = pv(&[0.4, 0.5, 0.1]);
        for weights in [w(0.0, 0.0), w(1.0, 0.0), w(0.0, 1.0), w(0.3, 0.9)] {
            assert_eq!(ensemble_predict_one(&l, &c, &weights).unwrap(), 1);
        }
    }

    #[test]
    fn disagreement_is_decided_by_weighted_confidence() {
        // 0.6 * 0.9 = 0.54 for the label model on class 1,
        // 0.7 * 0.8 = 0.56 for the classifier on class 2: classifier wins.
        let l = pv(&[0.0, 0.9, 0.1]);
        let c = pv(&[0.0, 0.2, 0.8]);
        assert_eq!(ensemble_predict_one(&l, &c, &w(0.6, 0.7)).unwrap(), 2);
        // Nudging the classifier weight below break-even flips it back.
        assert_eq!(ensemble_predict_one(&l, &c, &w(0.6, 0.67)).unwrap(), 1);
    }

    #[test]
    fn exact_tie_goes_to_the_label_model() {
        // 0.5 * 0.8 == 0.8 * 0.5 exactly, argmaxes disagree (0 vs 2).
        let l = pv(&[0.8, 0.2, 0.0]);
        let c = pv(&[0.25, 0.25, 0.5]);
        assert_eq!(ensemble_predict_one(&l, &c, &w(0.5, 0.8)).unwrap(), 0);
    }

    #[test]
    fn zero_label_weight_cedes_every_disagreement() {
        let l = pv(&[0.9, 0.1]);
        let c = pv(&[0.2, 0.8]);
        assert_eq!(ensemble_predict_one(&l, &c, &w(0.0, 0.1)).unwrap(), 1);
        // Both zero: tie, label model keeps it.
        assert_eq!(ensemble_predict_one(&l, &c, &w(0.0, 0.0)).unwrap(), 0);
    }

    #[test]
    fn output_is_always_one_of_the_two_argmaxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let k = rng.random_range(2..6);
            let mut draw = || {
                let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                let sum: f64 = raw.iter().sum();
                ProbVector::new(raw.iter().map(|x| x / sum).collect()).unwrap()
            };
            let l = draw();
            let c = draw();
            let weights = w(rng.random::<f64>(), rng.random::<f64>());
            let got = ensemble_predict_one(&l, &c, &weights).unwrap();
            assert!(got == l.argmax() || got == c.argmax());
        }
    }

    #[test]
    fn class_permutation_permutes_the_prediction() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let k = 4;
            let mut draw = || {
                let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|x| x / sum).collect::<Vec<_>>()
            };
            let l = draw();
            let c = draw();
            let weights = w(rng.random::<f64>(), rng.random::<f64>());
            // Rotate classes by one position.
            let rot = |v: &[f64]| {
                let mut out = v.to_vec();
                out.rotate_right(1);
                ProbVector::new(out).unwrap()
            };
            let base = ensemble_predict_one(
                &ProbVector::new(l.clone()).unwrap(),
                &ProbVector::new(c.clone()).unwrap(),
                &weights,
            )
            .unwrap();
            let rotated = ensemble_predict_one(&rot(&l), &rot(&c), &weights).unwrap();
            assert_eq!(rotated, (base + 1) % k);
        }
    }

    #[test]
    fn batch_variant_checks_lengths_and_matches_singles() {
        let l = vec![pv(&[0.9, 0.1]), pv(&[0.3, 0.7])];
        let c = vec![pv(&[0.2, 0.8]), pv(&[0.6, 0.4])];
        let weights = w(0.9, 0.5);
        let batch = ensemble_predict(&l, &c, &weights).unwrap();
        for (i, got) in batch.iter().enumerate() {
            assert_eq!(*got, ensemble_predict_one(&l[i], &c[i], &weights).unwrap());
        }
        assert!(ensemble_predict(&l, &c[..1], &weights).is_err());
        // Width mismatch inside one pair is also rejected.
        assert!(ensemble_predict_one(&pv(&[1.0]), &pv(&[0.5, 0.5]), &weights).is_err());
    }
}
