//! Experiment orchestration: configuration, the per-batch runner for every
//! scheme and baseline, metrics, and CSV/JSON/SVG output.

pub mod config;
pub(crate) mod knn_cache;
pub mod metrics;
pub mod output;
pub mod plot;
pub mod runner;
