//! Datasets and the noisy batch stream.
//!
//! - [`Instance`] / [`Dataset`]: labeled feature vectors, with the observed
//!   (possibly corrupted) label kept separate from the hidden ground truth.
//! - [`make_synthetic`]: Gaussian-cluster generator with tunable separability.
//! - [`inject_ncar_noise`]: symmetric label corruption, independent per
//!   instance, wrong label uniform over the remaining classes.
//! - [`stream_batches`]: splits a clean pool into a clean kick-start batch,
//!   a clean test set, and a sequence of equal-size noisy batches.

pub mod csv_io;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{RadError, Result};
use crate::scalar::Scalar;

/// One labeled data point.
///
/// `given_label` is what a learner sees; `true_label` is the hidden ground
/// truth, visible only to the oracle and to metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<F: Scalar> {
    /// Unique within a run; assigned at generation/load time.
    pub id: usize,
    pub features: Vec<F>,
    pub given_label: usize,
    pub true_label: usize,
}

impl<F: Scalar> Instance<F> {
    /// True when the observed label still matches the ground truth.
    pub fn is_clean(&self) -> bool {
        self.given_label == self.true_label
    }
}

/// A set of instances with uniform feature width and a fixed class count.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F: Scalar> {
    pub instances: Vec<Instance<F>>,
    pub n_features: usize,
    pub n_classes: usize,
}

impl<F: Scalar> Dataset<F> {
    /// Empty dataset with the given shape.
    pub fn new(n_features: usize, n_classes: usize) -> Self {
        Dataset { instances: Vec::new(), n_features, n_classes }
    }

    /// Builds a dataset, validating width and label ranges.
    pub fn from_instances(
        instances: Vec<Instance<F>>,
        n_features: usize,
        n_classes: usize,
    ) -> Result<Self> {
        let mut ds = Dataset::new(n_features, n_classes);
        for inst in instances {
            ds.push(inst)?;
        }
        Ok(ds)
    }

    /// Appends one instance after checking the dataset invariants.
    pub fn push(&mut self, inst: Instance<F>) -> Result<()> {
        if inst.features.len() != self.n_features {
            return Err(RadError::InvalidData(format!(
                "instance {} has {} features, dataset expects {}",
                inst.id,
                inst.features.len(),
                self.n_features
            )));
        }
        if inst.given_label >= self.n_classes || inst.true_label >= self.n_classes {
            return Err(RadError::InvalidData(format!(
                "instance {} has label out of range (classes: {})",
                inst.id, self.n_classes
            )));
        }
        self.instances.push(inst);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Number of instances carrying each given label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for inst in &self.instances {
            counts[inst.given_label] += 1;
        }
        counts
    }

    /// Fraction of instances whose given label differs from the truth.
    pub fn noisy_fraction(&self) -> f64 {
        if self.instances.is_empty() {
            return 0.0;
        }
        let noisy = self.instances.iter().filter(|i| !i.is_clean()).count();
        noisy as f64 / self.instances.len() as f64
    }
}

/// An ordered stream: clean kick-start data, noisy batches, clean test set.
#[derive(Debug, Clone)]
pub struct BatchStream<F: Scalar> {
    /// Trusted initial batch; every label verified clean.
    pub d0: Dataset<F>,
    /// Equal-size batches carrying injected label noise.
    pub batches: Vec<Dataset<F>>,
    /// Clean held-out set used for every evaluation.
    pub test_set: Dataset<F>,
    pub k_classes: usize,
    pub noise_level: f64,
}

impl<F: Scalar> BatchStream<F> {
    /// Fraction of corrupted labels across all noisy batches.
    pub fn noisy_fraction(&self) -> f64 {
        let total: usize = self.batches.iter().map(|b| b.len()).sum();
        if total == 0 {
            return 0.0;
        }
        let noisy: usize = self
            .batches
            .iter()
            .map(|b| b.instances.iter().filter(|i| !i.is_clean()).count())
            .sum();
        noisy as f64 / total as f64
    }

    /// Checks the structural invariants; used by tests and debug paths.
    pub fn validate(&self) -> Result<()> {
        for inst in self.d0.instances.iter().chain(self.test_set.instances.iter()) {
            if !inst.is_clean() {
                return Err(RadError::InvalidData(format!(
                    "instance {} in d0/test carries a corrupted label",
                    inst.id
                )));
            }
        }
        if let Some(first) = self.batches.first() {
            let n = first.len();
            if self.batches.iter().any(|b| b.len() != n) {
                return Err(RadError::InvalidData("batches differ in size".into()));
            }
        }
        Ok(())
    }
}

/// Parameters for [`stream_batches`].
#[derive(Debug, Clone)]
pub struct StreamSpec {
    pub d0_size: usize,
    pub batch_size: usize,
    pub test_size: usize,
    pub noise_level: f64,
    pub seed: u64,
    /// Shuffle the pool before splitting (on by default in the harness);
    /// with `false`, instances stream in their original order.
    pub shuffle: bool,
}

/// Deterministically mixes a base seed with a purpose tag, so independent
/// random streams (shuffling, noise, oracle sampling, ...) never share state.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, then a SplitMix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in tag.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = base ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Coordinates of `k` cluster means forming a regular simplex with pairwise
/// distance sqrt(2), embedded in `f` dimensions.
///
/// For f >= k the means are the first k standard basis vectors. For
/// f == k-1 the centered simplex is expressed in a Helmert basis (closed
/// form, no iterative orthogonalization). Anything narrower cannot hold k
/// equidistant points and is rejected.
fn simplex_means(k: usize, f: usize) -> Result<Vec<Vec<f64>>> {
    if f + 1 < k {
        return Err(RadError::InvalidConfig(format!(
            "{k} equidistant cluster means need at least {} features, got {f}",
            k - 1
        )));
    }
    if f >= k {
        let mut means = vec![vec![0.0; f]; k];
        for (c, m) in means.iter_mut().enumerate() {
            m[c] = 1.0;
        }
        return Ok(means);
    }
    // f == k-1: vertex i of the centered simplex has coordinate j (1-based)
    //   1/sqrt(j(j+1))  for i < j,  -j/sqrt(j(j+1))  for i == j,  0 for i > j.
    let mut means = vec![vec![0.0; f]; k];
    for (i, m) in means.iter_mut().enumerate() {
        for j in 1..k {
            let scale = 1.0 / ((j * (j + 1)) as f64).sqrt();
            m[j - 1] = if i < j {
                scale
            } else if i == j {
                -(j as f64) * scale
            } else {
                0.0
            };
        }
    }
    Ok(means)
}

/// Draws `n` instances from `k_classes` isotropic Gaussian clusters whose
/// means sit on a regular simplex (pairwise distance sqrt(2)).
///
/// Labels are assigned round-robin, so class counts differ by at most one.
/// `cluster_spread` is the per-coordinate standard deviation; the output is
/// clean (`given_label == true_label`) and deterministic for a fixed seed.
pub fn make_synthetic<F: Scalar>(
    k_classes: usize,
    n_features: usize,
    n: usize,
    cluster_spread: f64,
    seed: u64,
) -> Result<Dataset<F>> {
    if k_classes < 2 {
        return Err(RadError::InvalidConfig("need at least 2 classes".into()));
    }
    if n < k_classes {
        return Err(RadError::InvalidConfig(format!(
            "need at least one instance per class ({k_classes}), got n={n}"
        )));
    }
    if !(cluster_spread > 0.0) {
        return Err(RadError::InvalidConfig("cluster_spread must be positive".into()));
    }
    let means = simplex_means(k_classes, n_features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = Dataset::new(n_features, k_classes);
    for id in 0..n {
        let label = id % k_classes;
        let mean = &means[label];
        let mut features = Vec::with_capacity(n_features);
        for &m in mean.iter() {
            let z: f64 = rng.sample(StandardNormal);
            features.push(F::from_f64(m + cluster_spread * z));
        }
        ds.push(Instance { id, features, given_label: label, true_label: label })?;
    }
    Ok(ds)
}

/// Outcome summary of one noise-injection pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseReport {
    /// Instances whose given label was flipped.
    pub corrupted: usize,
}

/// Corrupts given labels in place: each instance is independently selected
/// with probability `noise_level`, and a selected instance receives a label
/// drawn uniformly from the classes other than its true one. True labels are
/// never modified. Distinct seeds yield independent corruption patterns.
pub fn inject_ncar_noise<F: Scalar>(
    dataset: &mut Dataset<F>,
    noise_level: f64,
    seed: u64,
) -> Result<NoiseReport> {
    if !(0.0..=1.0).contains(&noise_level) {
        return Err(RadError::InvalidConfig(format!(
            "noise_level must be in [0, 1], got {noise_level}"
        )));
    }
    if dataset.n_classes < 2 {
        return Err(RadError::InvalidConfig("need at least 2 classes to inject noise".into()));
    }
    let k = dataset.n_classes;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corrupted = 0;
    for inst in &mut dataset.instances {
        // random::<f64>() is in [0, 1), so 0.0 never corrupts and 1.0 always does.
        if rng.random::<f64>() < noise_level {
            let offset = rng.random_range(1..k);
            inst.given_label = (inst.true_label + offset) % k;
            corrupted += 1;
        }
    }
    Ok(NoiseReport { corrupted })
}

/// Splits a clean pool into kick-start data, noisy batches, and a test set.
///
/// The pool is shuffled (seeded) when `spec.shuffle` is set, then consumed in
/// order: `d0_size` instances, `test_size` instances, and as many full
/// batches of `batch_size` as remain. A trailing partial batch is dropped and
/// logged. Noise touches only the batches; the shuffle and the corruption
/// pattern come from independent derived seeds, so the same membership can be
/// re-noised by changing only the noise component upstream.
pub fn stream_batches<F: Scalar>(dataset: Dataset<F>, spec: &StreamSpec) -> Result<BatchStream<F>> {
    let n = dataset.len();
    if spec.d0_size + spec.test_size + spec.batch_size > n {
        return Err(RadError::InvalidConfig(format!(
            "d0 ({}) + test ({}) + one batch ({}) exceed pool size {n}",
            spec.d0_size, spec.test_size, spec.batch_size
        )));
    }
    if spec.batch_size == 0 {
        return Err(RadError::InvalidConfig("batch_size must be positive".into()));
    }
    if let Some(bad) = dataset.instances.iter().find(|i| !i.is_clean()) {
        return Err(RadError::InvalidData(format!(
            "stream source must be clean; instance {} has a corrupted label",
            bad.id
        )));
    }

    let n_features = dataset.n_features;
    let n_classes = dataset.n_classes;
    let mut pool = dataset.instances;
    if spec.shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "shuffle"));
        pool.shuffle(&mut rng);
    }

    let mut iter = pool.into_iter();
    let take = |iter: &mut std::vec::IntoIter<Instance<F>>, count: usize| -> Result<Dataset<F>> {
        Dataset::from_instances(iter.by_ref().take(count).collect(), n_features, n_classes)
    };
    let d0 = take(&mut iter, spec.d0_size)?;
    let test_set = take(&mut iter, spec.test_size)?;

    let remaining: Vec<Instance<F>> = iter.collect();
    let n_batches = remaining.len() / spec.batch_size;
    let leftover = remaining.len() % spec.batch_size;
    if leftover > 0 {
        log::warn!("dropping {leftover} trailing instances that do not fill a batch");
    }
    let mut batch_pool = Dataset::from_instances(
        remaining.into_iter().take(n_batches * spec.batch_size).collect(),
        n_features,
        n_classes,
    )?;
    inject_ncar_noise(&mut batch_pool, spec.noise_level, derive_seed(spec.seed, "noise"))?;

    let mut batches = Vec::with_capacity(n_batches);
    let mut iter = batch_pool.instances.into_iter();
    for _ in 0..n_batches {
        batches.push(take(&mut iter, spec.batch_size)?);
    }

    Ok(BatchStream { d0, batches, test_set, k_classes: n_classes, noise_level: spec.noise_level })
}
