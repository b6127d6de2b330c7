//! Small feed-forward network: ReLU hidden layers, softmax head,
//! cross-entropy loss, plain mini-batch SGD with a fixed learning rate.
//!
//! Training is fully deterministic: weights and the per-epoch shuffle both
//! derive from the init seed, so refitting on identical data reproduces the
//! parameters bit for bit. The forward/backward kernels use fixed-association
//! unrolled loops — fast under auto-vectorization, yet with a reproducible
//! summation order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datastream::Dataset;
use crate::scalar::Scalar;

/// One dense layer, weights row-major `[n_out][n_in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer<F: Scalar> {
    n_in: usize,
    n_out: usize,
    w: Vec<F>,
    b: Vec<F>,
}

/// Dot product with four independent accumulators: deterministic association,
/// wide enough for the compiler to vectorize.
#[inline]
fn dot<F: Scalar>(w: &[F], x: &[F]) -> F {
    debug_assert_eq!(w.len(), x.len());
    let mut acc = [F::ZERO; 4];
    let mut cw = w.chunks_exact(4);
    let mut cx = x.chunks_exact(4);
    for (ww, xx) in (&mut cw).zip(&mut cx) {
        for lane in 0..4 {
            acc[lane] = acc[lane] + ww[lane] * xx[lane];
        }
    }
    for (&ww, &xx) in cw.remainder().iter().zip(cx.remainder()) {
        acc[0] = acc[0] + ww * xx;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// `y += a * x`, element-wise.
#[inline]
fn axpy<F: Scalar>(y: &mut [F], a: F, x: &[F]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}

impl<F: Scalar> Layer<F> {
    /// He-uniform initialization: U(-sqrt(6/n_in), +sqrt(6/n_in)), zero bias.
    fn init(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / n_in as f64).sqrt();
        let w = (0..n_in * n_out)
            .map(|_| F::from_f64(rng.random_range(-limit..limit)))
            .collect();
        Layer { n_in, n_out, w, b: vec![F::ZERO; n_out] }
    }

    /// `out = W * input + b`.
    fn forward(&self, input: &[F], out: &mut [F]) {
        for (o, row) in out.iter_mut().zip(self.w.chunks_exact(self.n_in)) {
            *o = dot(row, input);
        }
        for (o, &b) in out.iter_mut().zip(&self.b) {
            *o = *o + b;
        }
    }
}

/// Zero-valued gradient buffers shaped like the layers.
struct Gradients<F: Scalar> {
    w: Vec<Vec<F>>,
    b: Vec<Vec<F>>,
}

impl<F: Scalar> Gradients<F> {
    fn new(layers: &[Layer<F>]) -> Self {
        Gradients {
            w: layers.iter().map(|l| vec![F::ZERO; l.w.len()]).collect(),
            b: layers.iter().map(|l| vec![F::ZERO; l.b.len()]).collect(),
        }
    }

    fn zero(&mut self) {
        for g in self.w.iter_mut().chain(self.b.iter_mut()) {
            g.fill(F::ZERO);
        }
    }
}

/// Fitted network parameters plus the class-presence mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpState<F: Scalar> {
    n_features: usize,
    n_classes: usize,
    /// Classes seen during training; absent classes are masked out of the
    /// softmax and predict with probability exactly zero.
    present: Vec<bool>,
    layers: Vec<Layer<F>>,
}

impl<F: Scalar> MlpState<F> {
    /// Trains from scratch; returns the fitted state and the mean training
    /// cross-entropy per epoch.
    pub fn fit(
        data: &Dataset<F>,
        hidden: &[usize],
        epochs: usize,
        learning_rate: f64,
        minibatch: usize,
        seed: u64,
    ) -> (Self, Vec<f64>) {
        let n = data.len();
        let n_features = data.n_features;
        let n_classes = data.n_classes;

        // Flat copies for sequential access in the hot loop.
        let mut features = Vec::with_capacity(n * n_features);
        let mut labels = Vec::with_capacity(n);
        let mut present = vec![false; n_classes];
        for inst in &data.instances {
            features.extend_from_slice(&inst.features);
            labels.push(inst.given_label as u32);
            present[inst.given_label] = true;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut width = n_features;
        for &h in hidden {
            layers.push(Layer::init(width, h, &mut rng));
            width = h;
        }
        layers.push(Layer::init(width, n_classes, &mut rng));

        let mut state = MlpState { n_features, n_classes, present, layers };
        let mut grads = Gradients::new(&state.layers);
        // Activations per layer boundary: [input, hidden..., logits].
        let mut acts: Vec<Vec<F>> = std::iter::once(vec![F::ZERO; n_features])
            .chain(state.layers.iter().map(|l| vec![F::ZERO; l.n_out]))
            .collect();
        let max_width = state.layers.iter().map(|l| l.n_out.max(l.n_in)).max().unwrap_or(1);
        let mut delta = vec![F::ZERO; max_width];
        let mut delta_next = vec![F::ZERO; max_width];
        let mut probs = vec![0.0f64; n_classes];

        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut epoch_losses = Vec::with_capacity(epochs);
        let last = state.layers.len();

        for _ in 0..epochs {
            order.shuffle(&mut rng);
            let mut loss_sum = 0.0;
            for chunk in order.chunks(minibatch) {
                grads.zero();
                for &idx in chunk {
                    let idx = idx as usize;
                    let x = &features[idx * n_features..(idx + 1) * n_features];
                    let y = labels[idx] as usize;

                    // Forward.
                    acts[0].copy_from_slice(x);
                    for (l, layer) in state.layers.iter().enumerate() {
                        let (before, after) = acts.split_at_mut(l + 1);
                        layer.forward(&before[l], &mut after[0]);
                        if l + 1 < last {
                            for a in after[0].iter_mut() {
                                if *a < F::ZERO {
                                    *a = F::ZERO;
                                }
                            }
                        }
                    }
                    loss_sum += masked_softmax(&acts[last], &state.present, &mut probs, y);

                    // Output delta: probs - one_hot(y), zero on masked classes.
                    for (c, d) in delta[..n_classes].iter_mut().enumerate() {
                        let p = probs[c] - if c == y { 1.0 } else { 0.0 };
                        *d = F::from_f64(p);
                    }

                    // Backward through the layers.
                    for l in (0..state.layers.len()).rev() {
                        let layer = &state.layers[l];
                        let input = &acts[l];
                        let dout = &delta[..layer.n_out];
                        let gw = &mut grads.w[l];
                        for (o, &d) in dout.iter().enumerate() {
                            axpy(&mut gw[o * layer.n_in..(o + 1) * layer.n_in], d, input);
                        }
                        axpy(&mut grads.b[l], F::ONE, dout);
                        if l > 0 {
                            // delta_next = W^T dout, gated by ReLU activity.
                            let din = &mut delta_next[..layer.n_in];
                            din.fill(F::ZERO);
                            for (o, &d) in dout.iter().enumerate() {
                                axpy(din, d, &layer.w[o * layer.n_in..(o + 1) * layer.n_in]);
                            }
                            for (d, &a) in din.iter_mut().zip(input.iter()) {
                                if a <= F::ZERO {
                                    *d = F::ZERO;
                                }
                            }
                            std::mem::swap(&mut delta, &mut delta_next);
                        }
                    }
                }
                // Mean-gradient step over the mini-batch.
                let step = F::from_f64(-learning_rate / chunk.len() as f64);
                for (l, layer) in state.layers.iter_mut().enumerate() {
                    axpy(&mut layer.w, step, &grads.w[l]);
                    axpy(&mut layer.b, step, &grads.b[l]);
                }
            }
            epoch_losses.push(loss_sum / n as f64);
        }
        (state, epoch_losses)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Softmax probabilities with absent classes masked to exact zero.
    pub fn predict_proba(&self, query: &[F]) -> Vec<f64> {
        let last = self.layers.len();
        let mut current: Vec<F> = query.to_vec();
        let mut next = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            next.clear();
            next.resize(layer.n_out, F::ZERO);
            layer.forward(&current, &mut next);
            if l + 1 < last {
                for a in next.iter_mut() {
                    if *a < F::ZERO {
                        *a = F::ZERO;
                    }
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        let mut probs = vec![0.0f64; self.n_classes];
        masked_softmax(&current, &self.present, &mut probs, 0);
        probs
    }
}

/// Writes the softmax of `logits` (restricted to `present` classes, computed
/// in f64) into `probs`; absent classes stay exactly zero. Returns the
/// cross-entropy of class `y`.
fn masked_softmax<F: Scalar>(logits: &[F], present: &[bool], probs: &mut [f64], y: usize) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for (c, &l) in logits.iter().enumerate() {
        if present[c] {
            max = max.max(l.to_f64());
        }
    }
    let mut sum = 0.0;
    for (c, p) in probs.iter_mut().enumerate() {
        if present[c] {
            *p = (logits[c].to_f64() - max).exp();
            sum += *p;
        } else {
            *p = 0.0;
        }
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    -probs[y].max(f64::MIN_POSITIVE).ln()
}
