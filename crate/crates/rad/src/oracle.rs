//! Simulated labeling oracle.
//!
//! The oracle answers "what is the true label of this instance?" by reading
//! the ground truth carried by the stream — the stand-in for a human
//! annotator. It enforces an optional per-batch query budget, counts every
//! answered query, and keeps a transcript (instance id, batch index, answer)
//! that can be exported as CSV for auditing query usage.

use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datastream::Instance;
use crate::error::{RadError, Result};
use crate::scalar::Scalar;

/// One answered oracle query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    /// Id of the instance that was asked about.
    pub instance_id: usize,
    /// Batch during which the query was made.
    pub batch_index: usize,
    /// The true label the oracle returned.
    pub answer: usize,
}

/// Ground-truth label source with an optional per-batch budget.
#[derive(Debug, Clone)]
pub struct Oracle {
    per_batch_limit: Option<usize>,
    queries_this_batch: usize,
    total_queries: usize,
    current_batch: usize,
    transcript: Vec<TranscriptEntry>,
}

impl Oracle {
    /// Unlimited oracle if `per_batch_limit` is `None`; otherwise at most
    /// that many answered queries per batch.
    pub fn new(per_batch_limit: Option<usize>) -> Self {
        Oracle {
            per_batch_limit,
            queries_this_batch: 0,
            total_queries: 0,
            current_batch: 0,
            transcript: Vec::new(),
        }
    }

    /// Starts a new batch: records its index and resets the per-batch budget.
    /// Call exactly once per batch, before any query from that batch.
    pub fn begin_batch(&mut self, batch_index: usize) {
        self.current_batch = batch_index;
        self.queries_this_batch = 0;
    }

    /// Remaining budget in the current batch (`None` = unlimited).
    pub fn remaining_budget(&self) -> Option<usize> {
        self.per_batch_limit.map(|lim| lim.saturating_sub(self.queries_this_batch))
    }

    /// Asks for one true label. Returns `None` without consuming anything if
    /// the per-batch budget is exhausted; otherwise answers, counts the
    /// query, and appends it to the transcript.
    pub fn query_one<F: Scalar>(&mut self, instance: &Instance<F>) -> Option<usize> {
        if let Some(limit) = self.per_batch_limit {
            if self.queries_this_batch >= limit {
                return None;
            }
        }
        self.queries_this_batch += 1;
        self.total_queries += 1;
        self.transcript.push(TranscriptEntry {
            instance_id: instance.id,
            batch_index: self.current_batch,
            answer: instance.true_label,
        });
        Some(instance.true_label)
    }

    /// Queries every instance in caller order until the budget runs out.
    /// Returns the corrected instances (given label replaced by the answer)
    /// and the refused ones, both preserving caller order.
    pub fn correct_batch<F: Scalar>(
        &mut self,
        instances: Vec<Instance<F>>,
    ) -> (Vec<Instance<F>>, Vec<Instance<F>>) {
        let mut corrected = Vec::new();
        let mut refused = Vec::new();
        for mut inst in instances {
            match self.query_one(&inst) {
                Some(answer) => {
                    inst.given_label = answer;
                    corrected.push(inst);
                }
                None => refused.push(inst),
            }
        }
        (corrected, refused)
    }

    /// Queries answered in the current batch so far.
    pub fn queries_this_batch(&self) -> usize {
        self.queries_this_batch
    }

    /// Queries answered over the oracle's lifetime.
    pub fn total_queries(&self) -> usize {
        self.total_queries
    }

    /// All answered queries, in the order they were asked.
    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// Writes the transcript as CSV (`instance_id,batch_index,answer`).
    pub fn write_transcript_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "instance_id,batch_index,answer")?;
        for entry in &self.transcript {
            writeln!(out, "{},{},{}", entry.instance_id, entry.batch_index, entry.answer)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Picks `n_lim` distinct positions of a batch uniformly at random, for the
/// baseline that spends its whole budget before training instead of
/// targeting suspicious labels. Returned positions are sorted ascending.
pub fn preselect_random(batch_len: usize, n_lim: usize, seed: u64) -> Result<Vec<usize>> {
    if n_lim > batch_len {
        return Err(RadError::InvalidConfig(format!(
            "cannot preselect {n_lim} instances from a batch of {batch_len}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = (0..batch_len).collect();
    positions.shuffle(&mut rng);
    positions.truncate(n_lim);
    positions.sort_unstable();
    Ok(positions)
}
