//! Online robust learning from noisily labeled batch streams.
//!
//! The crate implements the RAD family of selection-based learners: a
//! label-quality model screens each arriving batch, an anomaly classifier
//! predicts on the survivors, and the two cooperate through confidence-
//! weighted ensembling, cross-model voting with an inactive-data bank, or
//! budgeted expert queries. A harness runs the schemes alongside reference
//! baselines on synthetic or CSV data and reports accuracy, macro-F1, and
//! data-admission metrics per batch.

pub mod datastream;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod models;
pub mod oracle;
pub mod scalar;
pub mod selection;

pub use error::{RadError, Result};
pub use scalar::Scalar;

/// Single-precision instance.
pub type Instance32 = datastream::Instance<f32>;
/// Double-precision instance.
pub type Instance64 = datastream::Instance<f64>;
/// Single-precision dataset.
pub type Dataset32 = datastream::Dataset<f32>;
/// Double-precision dataset.
pub type Dataset64 = datastream::Dataset<f64>;
/// Single-precision batch stream.
pub type BatchStream32 = datastream::BatchStream<f32>;
/// Double-precision batch stream.
pub type BatchStream64 = datastream::BatchStream<f64>;
