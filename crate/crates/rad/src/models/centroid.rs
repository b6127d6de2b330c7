//! Nearest-centroid classifier.
//!
//! Stores one mean prototype per class that appears in the training data and
//! turns distances into probabilities with a softmax over negative Euclidean
//! distance (temperature 1). Classes without a prototype get exactly zero.

use serde::{Deserialize, Serialize};

use crate::datastream::Dataset;
use crate::models::knn::squared_distance;
use crate::scalar::Scalar;

/// Fitted nearest-centroid model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidState<F: Scalar> {
    n_features: usize,
    n_classes: usize,
    /// Per-class mean, `None` for classes absent from the training data.
    centroids: Vec<Option<Vec<F>>>,
}

impl<F: Scalar> CentroidState<F> {
    /// Computes per-class means of the training features.
    pub fn fit(data: &Dataset<F>) -> Self {
        let f = data.n_features;
        let k = data.n_classes;
        let mut sums = vec![vec![F::ZERO; f]; k];
        let mut counts = vec![0usize; k];
        for inst in &data.instances {
            counts[inst.given_label] += 1;
            for (s, &x) in sums[inst.given_label].iter_mut().zip(&inst.features) {
                *s = *s + x;
            }
        }
        let centroids = sums
            .into_iter()
            .zip(&counts)
            .map(|(sum, &count)| {
                if count == 0 {
                    None
                } else {
                    let inv = F::ONE / F::from_usize(count);
                    Some(sum.into_iter().map(|s| s * inv).collect())
                }
            })
            .collect();
        CentroidState { n_features: f, n_classes: k, centroids }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Softmax over negative distances to the present centroids.
    pub fn predict_proba(&self, query: &[F]) -> Vec<f64> {
        let mut neg_dist = vec![f64::NEG_INFINITY; self.n_classes];
        let mut max = f64::NEG_INFINITY;
        for (c, centroid) in self.centroids.iter().enumerate() {
            if let Some(centroid) = centroid {
                let nd = -squared_distance(query, centroid).sqrt();
                neg_dist[c] = nd;
                max = max.max(nd);
            }
        }
        let mut probs = vec![0.0; self.n_classes];
        let mut sum = 0.0;
        for (p, &nd) in probs.iter_mut().zip(&neg_dist) {
            if nd > f64::NEG_INFINITY {
                *p = (nd - max).exp();
                sum += *p;
            }
        }
        for p in &mut probs {
            *p /= sum;
        }
        probs
    }
}
