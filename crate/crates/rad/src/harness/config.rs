//! Experiment configuration: a versioned, JSON-serializable description of
//! one experiment — data source, stream shape, noise level, scheme and
//! baselines, model hyperparameters, seeds, and output location.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{RadError, Result};
use crate::models::ModelConfig;

/// Version tag for serialized configs.
pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// A selection scheme or a baseline; each experiment runs one scheme plus
/// any number of baselines on the same stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    /// Keep what the label-quality model endorses, discard the rest.
    Basic,
    /// Two-model voting with an inactive list for deferred re-examination.
    Voting,
    /// Voting's first two steps, then an unlimited oracle for disputes.
    Active,
    /// Active with a per-batch query budget and uncertainty ranking.
    ActiveLimited,
    /// Classifier-only screening, unlimited oracle, per-batch retraining.
    Slim,
    /// Slim with a query budget and cross-entropy ranking.
    SlimLimited,
    /// Baseline: train on everything as given.
    NoSel,
    /// Baseline: omniscient filter — train only on truly clean labels.
    OptSel,
    /// Baseline: train on everything with labels restored to the truth.
    FullClean,
    /// Baseline: label model fitted once on the initial clean batch and
    /// frozen; classifier-only predictions.
    Ids,
    /// Baseline: a random budget-sized subset of each batch is corrected by
    /// the oracle before training; the rest passes through uncleansed.
    PreselectOracle,
}

impl RunKind {
    /// All kinds, in a stable order.
    pub const ALL: [RunKind; 11] = [
        RunKind::Basic,
        RunKind::Voting,
        RunKind::Active,
        RunKind::ActiveLimited,
        RunKind::Slim,
        RunKind::SlimLimited,
        RunKind::NoSel,
        RunKind::OptSel,
        RunKind::FullClean,
        RunKind::Ids,
        RunKind::PreselectOracle,
    ];

    /// Stable snake_case name, used in filenames and CLI arguments.
    pub fn name(self) -> &'static str {
        match self {
            RunKind::Basic => "basic",
            RunKind::Voting => "voting",
            RunKind::Active => "active",
            RunKind::ActiveLimited => "active_limited",
            RunKind::Slim => "slim",
            RunKind::SlimLimited => "slim_limited",
            RunKind::NoSel => "no_sel",
            RunKind::OptSel => "opt_sel",
            RunKind::FullClean => "full_clean",
            RunKind::Ids => "ids",
            RunKind::PreselectOracle => "preselect_oracle",
        }
    }

    /// Whether this kind is one of the selection schemes (vs a baseline).
    pub fn is_scheme(self) -> bool {
        matches!(
            self,
            RunKind::Basic
                | RunKind::Voting
                | RunKind::Active
                | RunKind::ActiveLimited
                | RunKind::Slim
                | RunKind::SlimLimited
        )
    }

    /// Whether this kind needs a query budget (`n_lim`) configured.
    pub fn needs_budget(self) -> bool {
        matches!(
            self,
            RunKind::ActiveLimited | RunKind::SlimLimited | RunKind::PreselectOracle
        )
    }

    /// Whether predictions come from the classifier alone instead of the
    /// two-model ensemble.
    pub fn classifier_only(self) -> bool {
        matches!(self, RunKind::Slim | RunKind::SlimLimited | RunKind::Ids)
    }
}

impl std::fmt::Display for RunKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RunKind {
    type Err = RadError;

    fn from_str(s: &str) -> Result<Self> {
        RunKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| RadError::InvalidConfig(format!("unknown run kind '{s}'")))
    }
}

/// Where the stream's instances come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataSource {
    /// Gaussian class clusters generated on the fly; each run seed draws its
    /// own dataset.
    Synthetic { k_classes: usize, n_features: usize, cluster_spread: f64 },
    /// A labeled CSV file with a header row.
    Csv {
        path: PathBuf,
        label_column: String,
        #[serde(default)]
        feature_columns: Option<Vec<String>>,
        #[serde(default)]
        classes: Option<Vec<String>>,
    },
}

/// Per-batch oracle budget: an absolute count or a fraction of the batch
/// size (resolved as `floor(fraction * batch_size)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetSpec {
    Count(usize),
    Fraction(f64),
}

impl BudgetSpec {
    /// Resolves to an absolute per-batch query count.
    pub fn resolve(self, batch_size: usize) -> usize {
        match self {
            BudgetSpec::Count(n) => n,
            BudgetSpec::Fraction(f) => (f * batch_size as f64).floor() as usize,
        }
    }
}

/// Storage precision for features and model parameters. Probabilities and
/// metrics are always computed in `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

fn default_version() -> u32 {
    CONFIG_FORMAT_VERSION
}

fn default_r() -> usize {
    2
}

fn default_shuffle() -> bool {
    true
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Config format version; readers reject other versions.
    #[serde(default = "default_version")]
    pub version: u32,
    /// Where instances come from.
    pub data: DataSource,
    /// Size of the initial clean training batch.
    pub d0_size: usize,
    /// Instances per streamed batch.
    pub batch_size: usize,
    /// Size of the clean held-out test set.
    pub test_size: usize,
    /// Number of streamed batches. Required for synthetic data; for CSV,
    /// `None` means as many full batches as the file provides.
    #[serde(default)]
    pub n_batches: Option<usize>,
    /// Fraction of streamed given labels corrupted.
    pub noise_level: f64,
    /// The selection scheme under test.
    pub scheme: RunKind,
    /// Baselines to run on the same stream.
    #[serde(default)]
    pub baselines: Vec<RunKind>,
    /// Label-quality model.
    #[serde(default = "ModelConfig::default_label_model")]
    pub label_model: ModelConfig,
    /// Classifier.
    #[serde(default = "ModelConfig::default_classifier")]
    pub classifier_model: ModelConfig,
    /// Inactive-list entries re-examined per batch (voting).
    #[serde(default = "default_r")]
    pub r: usize,
    /// Per-batch oracle budget for the limited schemes and the pre-select
    /// baseline.
    #[serde(default)]
    pub n_lim: Option<BudgetSpec>,
    /// One full run per seed; reported metrics aggregate across them.
    pub seeds: Vec<u64>,
    /// Base seed for model parameter initialization (fixed across run
    /// seeds, so every run starts from the same models).
    #[serde(default)]
    pub init_seed: u64,
    /// Feature/parameter storage precision.
    #[serde(default)]
    pub precision: Precision,
    /// Shuffle the source data before splitting the stream.
    #[serde(default = "default_shuffle")]
    pub shuffle: bool,
    /// Where CSV/JSON/plot outputs go (CLI `--out` overrides).
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Reads and validates a config from a JSON file.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            RadError::InvalidConfig(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    /// Parses and validates a config from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| RadError::InvalidConfig(format!("config JSON: {e}")))?;
        if config.version != CONFIG_FORMAT_VERSION {
            return Err(RadError::UnsupportedVersion {
                found: config.version,
                expected: CONFIG_FORMAT_VERSION,
            });
        }
        config.validate()?;
        Ok(config)
    }

    /// Serializes to pretty JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks internal consistency; every loaded config passes through here.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(RadError::InvalidConfig(msg));
        match &self.data {
            DataSource::Synthetic { k_classes, n_features, cluster_spread } => {
                if *k_classes < 2 {
                    return fail(format!("synthetic data needs k_classes >= 2, got {k_classes}"));
                }
                if *n_features == 0 {
                    return fail("synthetic data needs n_features >= 1".into());
                }
                if *n_features + 1 < *k_classes {
                    return fail(format!(
                        "synthetic data needs n_features >= k_classes - 1 \
                         ({n_features} features cannot separate {k_classes} clusters)"
                    ));
                }
                if !(*cluster_spread > 0.0) {
                    return fail(format!("cluster_spread must be > 0, got {cluster_spread}"));
                }
                if self.n_batches.is_none() {
                    return fail("synthetic data needs n_batches".into());
                }
            }
            DataSource::Csv { path, .. } => {
                if path.as_os_str().is_empty() {
                    return fail("csv data source needs a path".into());
                }
            }
        }
        for (name, v) in
            [("d0_size", self.d0_size), ("batch_size", self.batch_size), ("test_size", self.test_size)]
        {
            if v == 0 {
                return fail(format!("{name} must be >= 1"));
            }
        }
        if let Some(n) = self.n_batches {
            if n == 0 {
                return fail("n_batches must be >= 1 when set".into());
            }
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return fail(format!("noise_level must be in [0,1], got {}", self.noise_level));
        }
        if !self.scheme.is_scheme() {
            return fail(format!("'{}' is a baseline, not a scheme", self.scheme));
        }
        for b in &self.baselines {
            if b.is_scheme() {
                return fail(format!("'{b}' is a scheme, not a baseline"));
            }
        }
        let mut sorted = self.baselines.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.baselines.len() {
            return fail("duplicate baselines".into());
        }
        if self.seeds.is_empty() {
            return fail("seeds must be non-empty".into());
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return fail("duplicate seeds".into());
        }
        match self.n_lim {
            Some(BudgetSpec::Count(_)) => {}
            Some(BudgetSpec::Fraction(f)) => {
                if !(f > 0.0 && f <= 1.0) {
                    return fail(format!("n_lim fraction must be in (0,1], got {f}"));
                }
            }
            None => {
                let mut budgeted = self
                    .baselines
                    .iter()
                    .copied()
                    .chain([self.scheme])
                    .filter(|k| k.needs_budget());
                if let Some(kind) = budgeted.next() {
                    return fail(format!("'{kind}' requires n_lim"));
                }
            }
        }
        Ok(())
    }

    /// The per-batch query budget, resolved against the batch size.
    pub fn resolved_budget(&self) -> Option<usize> {
        self.n_lim.map(|b| b.resolve(self.batch_size))
    }
}

/// Small, fast configuration shared by unit tests across modules.
#[cfg(test)]
pub(crate) fn tiny_config() -> ExperimentConfig {
    ExperimentConfig {
        version: CONFIG_FORMAT_VERSION,
        data: DataSource::Synthetic { k_classes: 3, n_features: 4, cluster_spread: 0.5 },
        d0_size: 60,
        batch_size: 30,
        test_size: 60,
        n_batches: Some(3),
        noise_level: 0.3,
        scheme: RunKind::Basic,
        baselines: vec![RunKind::NoSel],
        label_model: ModelConfig::Knn { k: 3 },
        classifier_model: ModelConfig::Knn { k: 3 },
        r: 2,
        n_lim: None,
        seeds: vec![1, 2],
        init_seed: 0,
        precision: Precision::F32,
        shuffle: true,
        output_dir: PathBuf::from("runs"),
    }
}
