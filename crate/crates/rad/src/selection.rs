//! Noisy-data selection schemes.
//!
//! Each scheme partitions an incoming batch by comparing model predictions
//! against the given (possibly corrupted) labels:
//!
//! - [`select_basic`]: keep instances the label-quality model agrees with,
//!   discard the rest.
//! - [`select_voting`]: like basic, but disagreements get a second opinion
//!   from the classifier, and still-undecided instances wait on an
//!   [`InactiveList`] to be re-examined by better models in later rounds.
//! - [`select_active`]: like voting's first two steps, but instances both
//!   models dispute are sent to the oracle — all of them, or only the most
//!   uncertain ones under a query limit ([`rank_uncertainty`]).
//! - [`select_slim`]: classifier-only screening; mismatches go to the oracle,
//!   prioritized by the cross-entropy of the given label
//!   ([`rank_label_cross_entropy`]).
//!
//! Every instance of a batch ends up in exactly one bucket of the returned
//! [`SelectionOutcome`] (or parked on the inactive list).

use std::collections::BTreeMap;

use crate::datastream::Instance;
use crate::error::Result;
use crate::models::{Predictor, ProbVector};
use crate::oracle::Oracle;
use crate::scalar::Scalar;

/// What a selection pass decided for one batch.
///
/// `cleansed`, `rescued`, and `corrected` are the instances admitted to
/// training (labels already replaced where the scheme replaces them).
/// `promoted_*` are instances admitted from the inactive list during voting
/// re-examination. `discarded` records the ids dropped permanently;
/// `inactive` holds the instances parked on the inactive list instead.
#[derive(Debug, Clone, Default)]
pub struct SelectionOutcome<F: Scalar> {
    /// Agreement with the given label on the first check.
    pub cleansed: Vec<Instance<F>>,
    /// Admitted on a second opinion (label kept or replaced by the models'
    /// common prediction).
    pub rescued: Vec<Instance<F>>,
    /// Given label replaced by an oracle answer.
    pub corrected: Vec<Instance<F>>,
    /// Ids of instances dropped permanently.
    pub discarded: Vec<usize>,
    /// Instances parked on the inactive list this call (voting only).
    pub inactive: Vec<Instance<F>>,
    /// Oracle queries answered during this call.
    pub queries_used: usize,
    /// Inactive-list instances promoted on first-check agreement.
    pub promoted_cleansed: Vec<Instance<F>>,
    /// Inactive-list instances promoted on a second opinion.
    pub promoted_rescued: Vec<Instance<F>>,
}

impl<F: Scalar> SelectionOutcome<F> {
    /// Instances admitted to training by this call, in admission order.
    pub fn admitted(&self) -> impl Iterator<Item = &Instance<F>> {
        self.cleansed
            .iter()
            .chain(&self.rescued)
            .chain(&self.corrected)
            .chain(&self.promoted_cleansed)
            .chain(&self.promoted_rescued)
    }
}

/// Keeps instances that the label-quality model endorses: the model's
/// predicted class must equal the given label. Everything else is discarded
/// permanently.
pub fn select_basic<F: Scalar>(
    batch: &[Instance<F>],
    label_model: &dyn Predictor<F>,
) -> Result<SelectionOutcome<F>> {
    let mut out = SelectionOutcome::default();
    for inst in batch {
        if label_model.predict(&inst.features)? == inst.given_label {
            out.cleansed.push(inst.clone());
        } else {
            out.discarded.push(inst.id);
        }
    }
    Ok(out)
}

/// Verdict of one two-model vote on one instance.
enum Vote {
    /// Label-quality model agrees with the given label.
    Cleansed,
    /// Classifier agrees with the given label.
    RescuedKept,
    /// The two models agree with each other; their common class replaces the
    /// given label.
    RescuedRelabeled(usize),
    /// No two of {label model, classifier, given label} agree.
    Undecided,
}

fn vote_once<F: Scalar>(
    inst: &Instance<F>,
    label_model: &dyn Predictor<F>,
    classifier: &dyn Predictor<F>,
) -> Result<Vote> {
    let label_class = label_model.predict(&inst.features)?;
    if label_class == inst.given_label {
        return Ok(Vote::Cleansed);
    }
    let classifier_class = classifier.predict(&inst.features)?;
    if classifier_class == inst.given_label {
        return Ok(Vote::RescuedKept);
    }
    if classifier_class == label_class {
        return Ok(Vote::RescuedRelabeled(classifier_class));
    }
    Ok(Vote::Undecided)
}

/// Instances no vote could decide yet, grouped by the batch that brought
/// them, waiting to be re-examined by the better models of later rounds.
#[derive(Debug, Clone, Default)]
pub struct InactiveList<F: Scalar> {
    entries: BTreeMap<usize, Vec<Instance<F>>>,
}

impl<F: Scalar> InactiveList<F> {
    pub fn new() -> Self {
        InactiveList { entries: BTreeMap::new() }
    }

    /// Parks instances under the batch that brought them.
    pub fn park(&mut self, batch_index: usize, instances: Vec<Instance<F>>) {
        if !instances.is_empty() {
            self.entries.entry(batch_index).or_default().extend(instances);
        }
    }

    /// Number of non-empty batch entries.
    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    /// Total parked instances.
    pub fn total_instances(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Instances parked under one batch index.
    pub fn entry(&self, batch_index: usize) -> Option<&[Instance<F>]> {
        self.entries.get(&batch_index).map(Vec::as_slice)
    }

    /// Batch keys of the `r` largest entries — ties broken toward the lower
    /// batch index — in that priority order.
    fn reprocess_targets(&self, r: usize) -> Vec<usize> {
        let mut keys: Vec<usize> = self.entries.keys().copied().collect();
        // BTreeMap iteration is index-ascending, so a stable sort by
        // descending size leaves equal-sized entries in index order.
        keys.sort_by_key(|k| std::cmp::Reverse(self.entries[k].len()));
        keys.truncate(r);
        keys
    }
}

/// Two-model voting selection with deferred re-examination.
///
/// First pass over the batch: agreement with the label-quality model
/// cleanses; otherwise a classifier vote can rescue the instance, either
/// keeping the given label or replacing it with the class both models agree
/// on. Instances no vote decides are parked on `inactive` under this batch's
/// index.
///
/// Then the `reprocess_entries` largest inactive entries (ties toward the
/// older batch) are re-voted with the current models; promoted instances
/// leave the list permanently, the rest keep waiting. The entry parked by
/// this very call may occupy one of those slots, but re-voting it with the
/// models that just examined it cannot change any verdict, so it is skipped
/// rather than recomputed.
pub fn select_voting<F: Scalar>(
    batch: &[Instance<F>],
    batch_index: usize,
    label_model: &dyn Predictor<F>,
    classifier: &dyn Predictor<F>,
    inactive: &mut InactiveList<F>,
    reprocess_entries: usize,
) -> Result<SelectionOutcome<F>> {
    let mut out = SelectionOutcome::default();
    let mut undecided = Vec::new();
    for inst in batch {
        match vote_once(inst, label_model, classifier)? {
            Vote::Cleansed => out.cleansed.push(inst.clone()),
            Vote::RescuedKept => out.rescued.push(inst.clone()),
            Vote::RescuedRelabeled(class) => {
                let mut kept = inst.clone();
                kept.given_label = class;
                out.rescued.push(kept);
            }
            Vote::Undecided => undecided.push(inst.clone()),
        }
    }
    out.inactive = undecided.clone();
    inactive.park(batch_index, undecided);

    for key in inactive.reprocess_targets(reprocess_entries) {
        if key == batch_index {
            continue; // freshly parked: same models, provably the same votes
        }
        let parked = inactive.entries.remove(&key).expect("target key exists");
        let mut still_undecided = Vec::new();
        for inst in parked {
            match vote_once(&inst, label_model, classifier)? {
                Vote::Cleansed => out.promoted_cleansed.push(inst),
                Vote::RescuedKept => out.promoted_rescued.push(inst),
                Vote::RescuedRelabeled(class) => {
                    let mut kept = inst;
                    kept.given_label = class;
                    out.promoted_rescued.push(kept);
                }
                Vote::Undecided => still_undecided.push(inst),
            }
        }
        if !still_undecided.is_empty() {
            inactive.entries.insert(key, still_undecided);
        }
    }
    Ok(out)
}

/// Orders disputed instances by how much the models' answers call for a
/// human look, given one `(label_probs, classifier_probs)` pair per
/// instance. Returns the positions of the `n_lim` picks, in pick order.
///
/// Two rankings are interleaved, starting with the first:
/// 1. by Euclidean distance between the two probability vectors, largest
///    first — the models disagree most sharply;
/// 2. by the sum of the two vectors' population standard deviations,
///    smallest first — both models are flattest, i.e. least decided.
///
/// Heads are taken alternately, skipping instances already picked, until
/// `min(n_lim, n)` are chosen. Both rankings are stable: equal keys keep
/// their original batch order.
pub fn rank_uncertainty(pairs: &[(ProbVector, ProbVector)], n_lim: usize) -> Vec<usize> {
    let dist: Vec<f64> = pairs.iter().map(|(l, c)| l.euclidean_distance(c)).collect();
    let flat: Vec<f64> = pairs.iter().map(|(l, c)| l.population_std() + c.population_std()).collect();

    let mut by_distance: Vec<usize> = (0..pairs.len()).collect();
    by_distance.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]));
    let mut by_flatness: Vec<usize> = (0..pairs.len()).collect();
    by_flatness.sort_by(|&a, &b| flat[a].total_cmp(&flat[b]));

    let want = n_lim.min(pairs.len());
    let mut picked = vec![false; pairs.len()];
    let mut order = Vec::with_capacity(want);
    let mut heads = [by_distance.into_iter(), by_flatness.into_iter()];
    let mut turn = 0;
    while order.len() < want {
        for candidate in heads[turn].by_ref() {
            if !picked[candidate] {
                picked[candidate] = true;
                order.push(candidate);
                break;
            }
        }
        turn = 1 - turn;
    }
    order
}

/// Selection with an oracle for instances both models dispute.
///
/// Agreement with the label-quality model cleanses; otherwise agreement with
/// the classifier rescues (given label kept). The remaining suspects go to
/// the oracle: all of them when `n_lim` is `None`, otherwise only the
/// `n_lim` most uncertain per [`rank_uncertainty`] — the rest are discarded.
/// Suspects the oracle refuses (budget exhausted) are discarded too.
pub fn select_active<F: Scalar>(
    batch: &[Instance<F>],
    label_model: &dyn Predictor<F>,
    classifier: &dyn Predictor<F>,
    oracle: &mut Oracle,
    n_lim: Option<usize>,
) -> Result<SelectionOutcome<F>> {
    let mut out = SelectionOutcome::default();
    let mut suspects: Vec<Instance<F>> = Vec::new();
    let mut suspect_probs: Vec<(ProbVector, ProbVector)> = Vec::new();
    for inst in batch {
        let label_probs = label_model.predict_proba(&inst.features)?;
        if label_probs.argmax() == inst.given_label {
            out.cleansed.push(inst.clone());
            continue;
        }
        let classifier_probs = classifier.predict_proba(&inst.features)?;
        if classifier_probs.argmax() == inst.given_label {
            out.rescued.push(inst.clone());
            continue;
        }
        suspects.push(inst.clone());
        suspect_probs.push((label_probs, classifier_probs));
    }

    let to_ask: Vec<Instance<F>> = match n_lim {
        None => suspects,
        Some(limit) => {
            let ranked = rank_uncertainty(&suspect_probs, limit);
            let mut take = vec![false; suspects.len()];
            for &pos in &ranked {
                take[pos] = true;
            }
            for (inst, taken) in suspects.iter().zip(&take) {
                if !taken {
                    out.discarded.push(inst.id);
                }
            }
            let mut by_rank = Vec::with_capacity(ranked.len());
            let mut suspects = suspects.into_iter().map(Some).collect::<Vec<_>>();
            for pos in ranked {
                by_rank.push(suspects[pos].take().expect("rank positions are distinct"));
            }
            by_rank
        }
    };

    let (corrected, refused) = oracle.correct_batch(to_ask);
    out.queries_used = corrected.len();
    out.corrected = corrected;
    out.discarded.extend(refused.iter().map(|inst| inst.id));
    Ok(out)
}

/// Orders oracle candidates by the cross-entropy of the given label under
/// the classifier: positions with probability exactly zero come first (the
/// classifier rules the label out entirely), then descending
/// `-ln(max(p, 1e-12))`. Stable; returns the first `min(n_lim, n)`
/// positions in priority order.
pub fn rank_label_cross_entropy(given_label_probs: &[f64], n_lim: usize) -> Vec<usize> {
    // An exact zero maps to +inf, which sorts ahead of every clamped value —
    // the "ruled out entirely" group stays in front in original order.
    let key = |p: f64| if p == 0.0 { f64::INFINITY } else { -(p.max(1e-12)).ln() };
    let mut order: Vec<usize> = (0..given_label_probs.len()).collect();
    order.sort_by(|&a, &b| key(given_label_probs[b]).total_cmp(&key(given_label_probs[a])));
    order.truncate(n_lim.min(given_label_probs.len()));
    order
}

/// Classifier-only selection: instances the classifier agrees with are
/// cleansed; every mismatch goes to the oracle — all of them when `n_lim` is
/// `None`, otherwise the `n_lim` whose given labels the classifier finds
/// least probable per [`rank_label_cross_entropy`]. Unqueried or refused
/// mismatches are discarded.
///
/// Callers retrain the classifier on this batch's admissions only, not on an
/// accumulated pool — the memory-lean regime this scheme exists for.
pub fn select_slim<F: Scalar>(
    batch: &[Instance<F>],
    classifier: &dyn Predictor<F>,
    oracle: &mut Oracle,
    n_lim: Option<usize>,
) -> Result<SelectionOutcome<F>> {
    let mut out = SelectionOutcome::default();
    let mut mismatches: Vec<Instance<F>> = Vec::new();
    let mut given_probs: Vec<f64> = Vec::new();
    for inst in batch {
        let probs = classifier.predict_proba(&inst.features)?;
        if probs.argmax() == inst.given_label {
            out.cleansed.push(inst.clone());
        } else {
            given_probs.push(probs.probs().get(inst.given_label).copied().unwrap_or(0.0));
            mismatches.push(inst.clone());
        }
    }

    let to_ask: Vec<Instance<F>> = match n_lim {
        None => mismatches,
        Some(limit) => {
            let ranked = rank_label_cross_entropy(&given_probs, limit);
            let mut take = vec![false; mismatches.len()];
            for &pos in &ranked {
                take[pos] = true;
            }
            for (inst, taken) in mismatches.iter().zip(&take) {
                if !taken {
                    out.discarded.push(inst.id);
                }
            }
            let mut by_rank = Vec::with_capacity(ranked.len());
            let mut mismatches = mismatches.into_iter().map(Some).collect::<Vec<_>>();
            for pos in ranked {
                by_rank.push(mismatches[pos].take().expect("rank positions are distinct"));
            }
            by_rank
        }
    };

    let (corrected, refused) = oracle.correct_batch(to_ask);
    out.queries_used = corrected.len();
    out.corrected = corrected;
    out.discarded.extend(refused.iter().map(|inst| inst.id));
    Ok(out)
}
