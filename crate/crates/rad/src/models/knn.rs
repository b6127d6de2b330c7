//! k-nearest-neighbor voting classifier.
//!
//! Probabilities are neighbor class fractions (k=5 gives multiples of 0.2).
//! Neighbor order is a total order on (squared distance, class, insertion
//! index), so equidistant ties resolve to the lowest class index and results
//! never depend on scan order.

use serde::{Deserialize, Serialize};

use crate::datastream::Dataset;
use crate::scalar::Scalar;

/// Squared Euclidean distance, accumulated in the feature scalar type with a
/// fixed association (four independent partial sums), widened to `f64` at the
/// end. Every k-NN path in the crate must use this one function so that
/// incremental and brute-force scans agree bit for bit.
#[inline]
pub(crate) fn squared_distance<F: Scalar>(a: &[F], b: &[F]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [F::ZERO; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for lane in 0..4 {
            let d = xa[lane] - xb[lane];
            acc[lane] = acc[lane] + d * d;
        }
    }
    for (&xa, &xb) in ca.remainder().iter().zip(cb.remainder()) {
        let d = xa - xb;
        acc[0] = acc[0] + d * d;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])).to_f64()
}

/// Neighbor sort key: squared distance, then class, then pool index.
pub(crate) type NeighborKey = (f64, u32, u32);

/// Keeps the `k` smallest keys offered, in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct TopK {
    k: usize,
    entries: Vec<NeighborKey>,
}

impl TopK {
    pub(crate) fn new(k: usize) -> Self {
        TopK { k, entries: Vec::with_capacity(k) }
    }

    /// Offers one candidate; keeps it only if it is among the k smallest so far.
    pub(crate) fn offer(&mut self, key: NeighborKey) {
        if self.entries.len() == self.k {
            if key >= *self.entries.last().expect("k > 0") {
                return;
            }
            self.entries.pop();
        }
        let at = self.entries.partition_point(|e| *e < key);
        self.entries.insert(at, key);
    }

    #[cfg(test)]
    pub(crate) fn entries(&self) -> &[NeighborKey] {
        &self.entries
    }

    /// Class-vote fractions over the kept neighbors. Counts are divided once
    /// at the end, so fractions are correctly rounded (no additive drift) and
    /// a unanimous vote is exactly 1.0.
    pub(crate) fn vote(&self, n_classes: usize) -> Vec<f64> {
        let mut counts = vec![0usize; n_classes];
        for &(_, label, _) in &self.entries {
            counts[label as usize] += 1;
        }
        let n = self.entries.len();
        if n == 0 {
            return vec![0.0; n_classes];
        }
        counts.into_iter().map(|c| c as f64 / n as f64).collect()
    }
}

/// Fitted k-NN model: the training pool in insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnState<F: Scalar> {
    k: usize,
    n_features: usize,
    n_classes: usize,
    /// Row-major pool features, one row per instance.
    features: Vec<F>,
    labels: Vec<u32>,
}

impl<F: Scalar> KnnState<F> {
    /// Stores the training pool. Queries use min(k, pool size) neighbors.
    pub fn fit(k: usize, data: &Dataset<F>) -> Self {
        let n_features = data.n_features;
        let mut features = Vec::with_capacity(data.len() * n_features);
        let mut labels = Vec::with_capacity(data.len());
        for inst in &data.instances {
            features.extend_from_slice(&inst.features);
            labels.push(inst.given_label as u32);
        }
        KnnState { k, n_features, n_classes: data.n_classes, features, labels }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Neighbor vote fractions; classes with no neighbor get exactly zero.
    pub fn predict_proba(&self, query: &[F]) -> Vec<f64> {
        let mut top = TopK::new(self.k.min(self.labels.len()));
        for (idx, row) in self.features.chunks_exact(self.n_features).enumerate() {
            let d2 = squared_distance(query, row);
            top.offer((d2, self.labels[idx], idx as u32));
        }
        top.vote(self.n_classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastream::Instance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(points: &[(f64, f64, usize)], k_classes: usize) -> Dataset<f64> {
        let mut ds = Dataset::new(2, k_classes);
        for (i, &(x, y, label)) in points.iter().enumerate() {
            ds.push(Instance {
                id: i,
                features: vec![x, y],
                given_label: label,
                true_label: label,
            })
            .unwrap();
        }
        ds
    }

    #[test]
    fn unanimous_neighbors_give_probability_one() {
        // Query sits on a training point; its 5 nearest (itself included)
        // share class 1.
        let ds = dataset(
            &[
                (0.0, 0.0, 1),
                (0.1, 0.0, 1),
                (0.0, 0.1, 1),
                (0.1, 0.1, 1),
                (0.05, 0.05, 1),
                (9.0, 9.0, 0),
            ],
            2,
        );
        let knn = KnnState::fit(5, &ds);
        assert_eq!(knn.predict_proba(&[0.0, 0.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn votes_become_fractions() {
        // 3 neighbors of class 0 and 2 of class 1 within the 5 nearest.
        let ds = dataset(
            &[
                (0.0, 0.1, 0),
                (0.1, 0.0, 0),
                (0.1, 0.1, 0),
                (0.0, 0.2, 1),
                (0.2, 0.0, 1),
                (9.0, 9.0, 2),
            ],
            3,
        );
        let knn = KnnState::fit(5, &ds);
        assert_eq!(knn.predict_proba(&[0.0, 0.0]), vec![0.6, 0.4, 0.0]);
    }

    #[test]
    fn equidistant_tie_prefers_lower_class() {
        // Two points at the same distance from the query, classes 2 and 0:
        // with k=1 the class-0 point must win the neighbor slot.
        let ds = dataset(&[(1.0, 0.0, 2), (-1.0, 0.0, 0), (9.0, 9.0, 1)], 3);
        let knn = KnnState::fit(1, &ds);
        assert_eq!(knn.predict_proba(&[0.0, 0.0]), vec![1.0, 0.0, 0.0]);
        // Same distances, classes swapped in pool order: still class 0.
        let ds = dataset(&[(-1.0, 0.0, 0), (1.0, 0.0, 2), (9.0, 9.0, 1)], 3);
        let knn = KnnState::fit(1, &ds);
        assert_eq!(knn.predict_proba(&[0.0, 0.0]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn small_pool_uses_all_points() {
        let ds = dataset(&[(0.0, 0.0, 0), (1.0, 1.0, 1)], 2);
        let knn = KnnState::fit(5, &ds);
        assert_eq!(knn.predict_proba(&[0.0, 0.1]), vec![0.5, 0.5]);
    }

    #[test]
    fn top_k_keeps_the_smallest_in_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.random_range(1..40);
            let k = rng.random_range(1..8);
            let keys: Vec<NeighborKey> = (0..n)
                .map(|i| (rng.random_range(0..6) as f64, rng.random_range(0..3), i as u32))
                .collect();
            let mut top = TopK::new(k);
            for &key in &keys {
                top.offer(key);
            }
            let mut sorted = keys.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            sorted.truncate(k);
            assert_eq!(top.entries(), &sorted[..]);
        }
    }

    #[test]
    fn squared_distance_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let n = rng.random_range(1..40);
            let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
            assert!((squared_distance(&a, &b) - naive).abs() < 1e-12);
        }
    }
}
