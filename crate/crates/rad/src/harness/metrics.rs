//! Evaluation metrics: confusion counts, accuracy, macro-F1, and the
//! data-admission ("hot") ratios.
//!
//! Accuracy and F1 always derive from the same confusion matrix, so the two
//! can never disagree about which predictions were counted.

use crate::error::{RadError, Result};

/// Builds `confusion[true][predicted]` counts over aligned slices.
pub fn confusion_counts(preds: &[usize], truths: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    debug_assert_eq!(preds.len(), truths.len());
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &t) in preds.iter().zip(truths) {
        confusion[t][p] += 1;
    }
    confusion
}

/// Fraction of diagonal mass in a confusion matrix.
pub fn accuracy_from_confusion(confusion: &[Vec<usize>]) -> f64 {
    let total: usize = confusion.iter().map(|row| row.iter().sum::<usize>()).sum();
    if total == 0 {
        return 0.0;
    }
    let hits: usize = confusion.iter().enumerate().map(|(c, row)| row[c]).sum();
    hits as f64 / total as f64
}

/// Unweighted mean of per-class F1 scores. A class with no true instances and
/// no predictions contributes 0, the conservative convention.
pub fn macro_f1_from_confusion(confusion: &[Vec<usize>]) -> f64 {
    let k = confusion.len();
    if k == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for c in 0..k {
        let tp = confusion[c][c];
        let fn_: usize = confusion[c].iter().sum::<usize>() - tp;
        let fp: usize = (0..k).map(|t| confusion[t][c]).sum::<usize>() - tp;
        let denom = 2 * tp + fp + fn_;
        if denom > 0 {
            sum += 2.0 * tp as f64 / denom as f64;
        }
    }
    sum / k as f64
}

/// Per-batch selection tallies feeding the admission metrics. The kick-start
/// batch is never tallied; oracle-corrected instances train the models but do
/// not count as admitted stream data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchTally {
    /// Arriving batch size |D_i|.
    pub batch_size: usize,
    /// Cleansed instances kept with their given label, |D*_i|.
    pub kept: usize,
    /// Rescued instances (label kept or rewritten by agreement), |U*_i|.
    pub rescued: usize,
    /// Admitted instances whose final label matches the ground truth.
    pub truly_clean: usize,
}

impl BatchTally {
    /// Instances this batch contributed to the training pool.
    pub fn admitted(&self) -> usize {
        self.kept + self.rescued
    }
}

/// Cumulative admission metrics over a run prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HotMetrics {
    /// Fraction of streamed instances admitted to training:
    /// sum(kept + rescued) / sum(batch_size).
    pub a: f64,
    /// Fraction of admitted instances whose final label is truly clean:
    /// sum(truly_clean) / sum(kept + rescued); `None` while nothing has been
    /// admitted.
    pub a_truth: Option<f64>,
}

/// Computes the cumulative admission metrics over `tallies` (one entry per
/// observed batch, kick-start excluded). At least one batch must be present.
pub fn compute_hot_metrics(tallies: &[BatchTally]) -> Result<HotMetrics> {
    if tallies.is_empty() {
        return Err(RadError::InvalidData("no batch tallies".into()));
    }
    let arrived: usize = tallies.iter().map(|t| t.batch_size).sum();
    let admitted: usize = tallies.iter().map(|t| t.admitted()).sum();
    let clean: usize = tallies.iter().map(|t| t.truly_clean).sum();
    if arrived == 0 {
        return Err(RadError::InvalidData("batches are empty".into()));
    }
    let a = admitted as f64 / arrived as f64;
    let a_truth = if admitted == 0 { None } else { Some(clean as f64 / admitted as f64) };
    Ok(HotMetrics { a, a_truth })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_counts_the_diagonal() {
        let confusion = confusion_counts(&[0, 1, 1, 2], &[0, 1, 2, 2], 3);
        assert_eq!(confusion[0][0], 1);
        assert_eq!(confusion[2][1], 1);
        assert!((accuracy_from_confusion(&confusion) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn perfect_balanced_predictions_give_f1_one() {
        let preds: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let confusion = confusion_counts(&preds, &preds, 4);
        assert_eq!(macro_f1_from_confusion(&confusion), 1.0);
        assert_eq!(accuracy_from_confusion(&confusion), 1.0);
    }

    #[test]
    fn macro_f1_matches_a_hand_computation() {
        // Two classes: class 0 has tp=2, fp=1, fn=0 -> F1 = 4/5;
        // class 1 has tp=1, fp=0, fn=1 -> F1 = 2/3.
        let preds = [0, 0, 0, 1];
        let truths = [0, 0, 1, 1];
        let confusion = confusion_counts(&preds, &truths, 2);
        let f1 = macro_f1_from_confusion(&confusion);
        assert!((f1 - (0.8 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn unpredicted_empty_class_counts_as_zero() {
        // Class 2 never occurs and is never predicted: contributes 0 to the
        // macro average.
        let confusion = confusion_counts(&[0, 1], &[0, 1], 3);
        assert!((macro_f1_from_confusion(&confusion) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hot_metrics_follow_the_formulas() {
        // Two batches of 10; kept {6, 8}, rescued {1, 0} -> A = 15/20.
        let tallies = [
            BatchTally { batch_size: 10, kept: 6, rescued: 1, truly_clean: 7 },
            BatchTally { batch_size: 10, kept: 8, rescued: 0, truly_clean: 6 },
        ];
        let hot = compute_hot_metrics(&tallies).unwrap();
        assert_eq!(hot.a, 0.75);
        assert_eq!(hot.a_truth, Some(13.0 / 15.0));
    }

    #[test]
    fn all_clean_admissions_reach_one() {
        let tallies = [BatchTally { batch_size: 5, kept: 3, rescued: 1, truly_clean: 4 }];
        assert_eq!(compute_hot_metrics(&tallies).unwrap().a_truth, Some(1.0));
    }

    #[test]
    fn empty_admission_is_null_not_zero() {
        let tallies = [BatchTally { batch_size: 10, kept: 0, rescued: 0, truly_clean: 0 }];
        let hot = compute_hot_metrics(&tallies).unwrap();
        assert_eq!(hot.a, 0.0);
        assert_eq!(hot.a_truth, None);
        assert!(compute_hot_metrics(&[]).is_err());
    }
}
