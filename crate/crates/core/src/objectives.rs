//! Likelihood terms of the curation model and their lower bounds.
//!
//! All functions return log-likelihood values (higher is better) computed
//! from log-probabilities. Expectations over the augmentation distribution
//! are replaced by explicit finite draws, so each inequality below holds
//! exactly on shared draws:
//!
//! ```text
//! entropy_bound(p, S)          <= unlabelled_exact_ll(p, S)
//! pseudo_label_bound(p, y, S)  <= unlabelled_exact_ll(p, S)
//! aug_supervised_single_sample <= aug_supervised_multi_sample
//! mixmatch_pseudo_bound        <= mixmatch_jensen_bound          (M = 1)
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{self, check_labelers, logsumexp, LogProbVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    SupervisedConsensus,
    UnlabelledExact,
    EntropyBound,
    PseudoLabelBound,
    AugSingleSample,
    AugMultiSample,
    MixmatchJensen,
    MixmatchPseudo,
    NoConsensus,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 9] = [
        ObjectiveKind::SupervisedConsensus,
        ObjectiveKind::UnlabelledExact,
        ObjectiveKind::EntropyBound,
        ObjectiveKind::PseudoLabelBound,
        ObjectiveKind::AugSingleSample,
        ObjectiveKind::AugMultiSample,
        ObjectiveKind::MixmatchJensen,
        ObjectiveKind::MixmatchPseudo,
        ObjectiveKind::NoConsensus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::SupervisedConsensus => "supervised_consensus",
            ObjectiveKind::UnlabelledExact => "unlabelled_exact",
            ObjectiveKind::EntropyBound => "entropy_bound",
            ObjectiveKind::PseudoLabelBound => "pseudo_label_bound",
            ObjectiveKind::AugSingleSample => "aug_single_sample",
            ObjectiveKind::AugMultiSample => "aug_multi_sample",
            ObjectiveKind::MixmatchJensen => "mixmatch_jensen",
            ObjectiveKind::MixmatchPseudo => "mixmatch_pseudo",
            ObjectiveKind::NoConsensus => "no_consensus",
        }
    }

    /// Which observation type the objective scores.
    pub fn term(self) -> Term {
        match self {
            ObjectiveKind::SupervisedConsensus
            | ObjectiveKind::AugSingleSample
            | ObjectiveKind::AugMultiSample => Term::Labelled,
            ObjectiveKind::UnlabelledExact
            | ObjectiveKind::EntropyBound
            | ObjectiveKind::PseudoLabelBound
            | ObjectiveKind::MixmatchJensen
            | ObjectiveKind::MixmatchPseudo => Term::Unlabelled,
            ObjectiveKind::NoConsensus => Term::Rejected,
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three observation types of the curation likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    Labelled,
    Unlabelled,
    Rejected,
}

impl Term {
    pub fn name(self) -> &'static str {
        match self {
            Term::Labelled => "labelled",
            Term::Unlabelled => "unlabelled",
            Term::Rejected => "rejected",
        }
    }

    pub fn default_weight(self) -> f64 {
        match self {
            Term::Labelled | Term::Unlabelled => 1.0,
            // n_rejected is rarely known outside simulation.
            Term::Rejected => 0.0,
        }
    }
}

fn default_labelled_kind() -> ObjectiveKind {
    ObjectiveKind::AugSingleSample
}

/// Which objective to optimize and how to weight the observation types.
///
/// `kind` picks the unlabelled objective (or, when it is itself a labelled or
/// rejected kind, the only non-labelled objective); `labelled_kind` scores
/// labelled examples. Missing `weights` entries take [`Term::default_weight`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    #[serde(default = "default_labelled_kind")]
    pub labelled_kind: ObjectiveKind,
    pub s_labelers: u32,
    #[serde(default)]
    pub pseudo_label_threshold: f64,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, s_labelers: u32) -> Self {
        ObjectiveSpec {
            kind,
            labelled_kind: default_labelled_kind(),
            s_labelers,
            pseudo_label_threshold: 0.0,
            weights: BTreeMap::new(),
        }
    }

    pub fn with_weight(mut self, term: Term, weight: f64) -> Self {
        self.weights.insert(term.name().to_string(), weight);
        self
    }

    pub fn weight(&self, term: Term) -> f64 {
        self.weights
            .get(term.name())
            .copied()
            .unwrap_or_else(|| term.default_weight())
    }

    pub fn validate(&self) -> Result<()> {
        check_labelers(self.s_labelers, 1)
            .map_err(|e| Error::config("objective.s_labelers", e.to_string()))?;
        if !(0.0..=1.0).contains(&self.pseudo_label_threshold) {
            return Err(Error::config(
                "objective.pseudo_label_threshold",
                "must lie in [0, 1]",
            ));
        }
        if self.labelled_kind.term() != Term::Labelled {
            return Err(Error::config(
                "objective.labelled_kind",
                format!("{} does not score labelled examples", self.labelled_kind),
            ));
        }
        for (name, w) in &self.weights {
            if !["labelled", "unlabelled", "rejected"].contains(&name.as_str()) {
                return Err(Error::config(
                    format!("objective.weights.{name}"),
                    "unknown term (expected labelled, unlabelled or rejected)",
                ));
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::config(
                    format!("objective.weights.{name}"),
                    "must be finite and >= 0",
                ));
            }
        }
        if self.kind == ObjectiveKind::NoConsensus && self.s_labelers < 2 {
            return Err(Error::config(
                "objective.s_labelers",
                "no_consensus needs at least 2 labelers",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugRole {
    /// K augmentations of one labelled point.
    KAugmentations,
    /// One S-tuple: an augmentation per labeler.
    STuple,
}

/// Log-probabilities of several augmented draws of one underlying point.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedLogProbs {
    rows: Vec<LogProbVector>,
    role: AugRole,
}

impl AugmentedLogProbs {
    pub fn new(rows: Vec<LogProbVector>, role: AugRole) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("augmented draws"))?;
        let c = first.n_classes();
        if let Some(bad) = rows.iter().find(|r| r.n_classes() != c) {
            return Err(Error::DimensionMismatch {
                expected: c,
                got: bad.n_classes(),
            });
        }
        Ok(AugmentedLogProbs { rows, role })
    }

    pub fn rows(&self) -> &[LogProbVector] {
        &self.rows
    }

    pub fn role(&self) -> AugRole {
        self.role
    }

    pub fn n_classes(&self) -> usize {
        self.rows[0].n_classes()
    }

    fn expect_role(&self, role: AugRole) -> Result<()> {
        if self.role != role {
            return Err(Error::InvalidLogProbs(format!(
                "expected {role:?} draws, got {:?}",
                self.role
            )));
        }
        Ok(())
    }

    fn column(&self, y: usize) -> Result<Vec<f64>> {
        self.rows.iter().map(|r| r.get(y)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoLabel {
    pub label: usize,
    pub confidence: f64,
    pub accepted: bool,
}

/// `S log p_y(z)`: every one of the S labelers reported `y`.
pub fn supervised_consensus_ll(log_p: &LogProbVector, y: usize, s: u32) -> Result<f64> {
    check_labelers(s, 1)?;
    Ok(f64::from(s) * log_p.get(y)?)
}

/// `log Σ_y p_y(z)^S`, the exact unlabelled-point objective.
pub fn unlabelled_exact_ll(log_p: &LogProbVector, s: u32) -> Result<f64> {
    prob::log_consensus_prob(log_p, s)
}

/// `(S - 1) Σ_y p_y log p_y`, Jensen's bound on [`unlabelled_exact_ll`].
pub fn entropy_bound(log_p: &LogProbVector, s: u32) -> Result<f64> {
    check_labelers(s, 1)?;
    Ok(-f64::from(s - 1) * prob::entropy(log_p))
}

/// `S log p_{y*}(z)`: keeps one term of the consensus sum.
pub fn pseudo_label_bound(log_p: &LogProbVector, y_star: usize, s: u32) -> Result<f64> {
    supervised_consensus_ll(log_p, y_star, s)
}

pub fn select_pseudo_label(log_p: &LogProbVector, threshold: f64) -> PseudoLabel {
    let label = log_p.argmax();
    let confidence = log_p.as_slice()[label].exp().min(1.0);
    PseudoLabel {
        label,
        confidence,
        accepted: confidence >= threshold,
    }
}

/// `(1/K) Σ_k log p_y(z_k)`: the usual augmented training objective.
pub fn aug_supervised_single_sample(aug: &AugmentedLogProbs, y: usize) -> Result<f64> {
    aug.expect_role(AugRole::KAugmentations)?;
    let col = aug.column(y)?;
    Ok(col.iter().sum::<f64>() / col.len() as f64)
}

/// `log (1/K) Σ_k p_y(z_k)`: the multi-sample bound, never below the single
/// sample value on the same draws.
pub fn aug_supervised_multi_sample(aug: &AugmentedLogProbs, y: usize) -> Result<f64> {
    aug.expect_role(AugRole::KAugmentations)?;
    let col = aug.column(y)?;
    Ok(logsumexp(&col)? - (col.len() as f64).ln())
}

fn check_tuples(tuples: &[AugmentedLogProbs]) -> Result<()> {
    let first = tuples.first().ok_or(Error::Empty("mixmatch tuples"))?;
    let (s, c) = (first.rows.len(), first.n_classes());
    for t in tuples {
        t.expect_role(AugRole::STuple)?;
        if t.n_classes() != c {
            return Err(Error::DimensionMismatch {
                expected: c,
                got: t.n_classes(),
            });
        }
        if t.rows.len() != s {
            return Err(Error::InvalidLogProbs(format!(
                "tuples must all have {s} rows, found {}",
                t.rows.len()
            )));
        }
    }
    Ok(())
}

/// `Σ_s log p_y(z_s)` for every class `y`.
pub(crate) fn tuple_class_scores(tuple: &AugmentedLogProbs) -> Vec<f64> {
    (0..tuple.n_classes())
        .map(|y| tuple.rows.iter().map(|r| r.as_slice()[y]).sum())
        .collect()
}

/// Mean over tuples of `log Σ_y Π_s p_y(z_s)`.
pub fn mixmatch_jensen_bound(tuples: &[AugmentedLogProbs]) -> Result<f64> {
    check_tuples(tuples)?;
    let mut total = 0.0;
    for t in tuples {
        total += logsumexp(&tuple_class_scores(t))?.min(0.0);
    }
    Ok(total / tuples.len() as f64)
}

/// `log (1/M) Σ_m Π_s p_{y*}(z_s^m)`.
pub fn mixmatch_pseudo_bound(tuples: &[AugmentedLogProbs], y_star: usize) -> Result<f64> {
    check_tuples(tuples)?;
    let per_tuple: Vec<f64> = tuples
        .iter()
        .map(|t| Ok(t.column(y_star)?.iter().sum()))
        .collect::<Result<_>>()?;
    Ok(logsumexp(&per_tuple)? - (per_tuple.len() as f64).ln())
}

/// Pseudo-label for a set of tuples: the argmax of the mean probability of
/// row 0 (the weakly augmented row) across tuples.
pub fn mixmatch_pseudo_label(tuples: &[AugmentedLogProbs], threshold: f64) -> Result<PseudoLabel> {
    check_tuples(tuples)?;
    let c = tuples[0].n_classes();
    let mut mean = vec![0.0; c];
    for t in tuples {
        for (m, p) in mean.iter_mut().zip(t.rows[0].probs()) {
            *m += p / tuples.len() as f64;
        }
    }
    let total: f64 = mean.iter().sum();
    let log_mean = LogProbVector::new(mean.iter().map(|m| (m / total).ln()).collect())?;
    Ok(select_pseudo_label(&log_mean, threshold))
}

/// `n_rejected · log P̂(C=0)`, where `P̂(C=0)` averages `1 - Σ_y p_y^S` over
/// raw pool draws.
pub fn no_consensus_ll(pool_log_p: &[LogProbVector], s: u32, n_rejected: u64) -> Result<f64> {
    if pool_log_p.is_empty() {
        return Err(Error::Empty("no-consensus pool"));
    }
    check_labelers(s, 2)?;
    if n_rejected == 0 {
        return Ok(0.0);
    }
    let log_q = pool_log_q(pool_log_p, s)?;
    if log_q.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::ZeroRejectionProbability);
    }
    let log_mean = logsumexp(&log_q)? - (log_q.len() as f64).ln();
    Ok(n_rejected as f64 * log_mean)
}

pub(crate) fn pool_log_q(pool_log_p: &[LogProbVector], s: u32) -> Result<Vec<f64>> {
    pool_log_p
        .iter()
        .map(|lp| Ok(prob::log_no_consensus_prob(lp, s)?.log_prob))
        .collect()
}
