//! Log-space probability kernels.
//!
//! Every quantity here is a log-probability in nats. Powers `p^S` of small
//! probabilities underflow quickly in linear space, so sums of powers are
//! always evaluated as `logsumexp(S * log_p)`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on `logsumexp(values) = 0` accepted by [`LogProbVector::new`].
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Entries may exceed zero by at most this much (rounding in log_softmax).
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Log-probabilities below this are treated as exact zeros in `0 * log 0`.
pub const LOG_ZERO_CUTOFF: f64 = -700.0;

/// `log_consensus_prob` above this counts as certain consensus.
pub const CERTAIN_CONSENSUS_TOL: f64 = -1e-12;

/// Unconstrained classifier output, one entry per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("logits"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLogits);
        }
        Ok(LogitVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Normalized log class probabilities `log p_y(z)` over `C >= 2` classes.
///
/// Entries may be `-inf` (a class with exactly zero probability), never NaN
/// or `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LogProbVector(Vec<f64>);

impl LogProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidLogProbs(format!(
                "need at least 2 classes, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| v.is_nan() || **v > POSITIVITY_TOL) {
            return Err(Error::InvalidLogProbs(format!("entry {v} is not a log-probability")));
        }
        let total = logsumexp(&values)?;
        if (total).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidLogProbs(format!(
                "logsumexp is {total}, expected 0"
            )));
        }
        Ok(LogProbVector(values))
    }

    /// Builds the vector from linear-space probabilities.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        Self::new(probs.iter().map(|p| p.ln()).collect())
    }

    pub fn uniform(n_classes: usize) -> Result<Self> {
        Self::new(vec![-(n_classes as f64).ln(); n_classes])
    }

    pub fn one_hot(class: usize, n_classes: usize) -> Result<Self> {
        if class >= n_classes {
            return Err(Error::LabelOutOfRange {
                label: class,
                n_classes,
            });
        }
        let mut values = vec![f64::NEG_INFINITY; n_classes];
        values[class] = 0.0;
        Self::new(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn n_classes(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, class: usize) -> Result<f64> {
        self.0.get(class).copied().ok_or(Error::LabelOutOfRange {
            label: class,
            n_classes: self.0.len(),
        })
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|lp| lp.exp())
    }

    /// Most probable class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }
}

/// `log Σ exp(v)`, evaluated as `max + log Σ exp(v - max)`.
///
/// All `-inf` input returns `-inf`.
pub fn logsumexp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("logsumexp"));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        // -inf: every term is zero. +inf/NaN propagate.
        return Ok(max);
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Softmax weights `exp(v - logsumexp(v))`. All `-inf` input gives uniform
/// weights so callers never divide by zero.
pub fn softmax_weights(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![1.0 / values.len() as f64; values.len()];
    }
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn log_softmax(logits: &LogitVector) -> Result<LogProbVector> {
    let values = logits.as_slice();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLogits);
    }
    let lse = logsumexp(values)?;
    LogProbVector::new(values.iter().map(|v| v - lse).collect())
}

pub(crate) fn check_labelers(s: u32, min: u32) -> Result<()> {
    if s < min {
        let reason = if min == 1 {
            "need at least one labeler"
        } else {
            "a single labeler always reaches consensus"
        };
        return Err(Error::InvalidLabelers { s, reason });
    }
    Ok(())
}

/// `log P(C=1 | z) = log Σ_y p_y(z)^S`.
pub fn log_consensus_prob(log_p: &LogProbVector, s: u32) -> Result<f64> {
    check_labelers(s, 1)?;
    let scaled: Vec<f64> = log_p.as_slice().iter().map(|lp| f64::from(s) * lp).collect();
    // Rounding can put this a hair above zero.
    Ok(logsumexp(&scaled)?.min(0.0))
}

/// Result of [`log_no_consensus_prob`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoConsensus {
    pub log_prob: f64,
    /// Set when consensus is certain and `log_prob` is `-inf`.
    pub zero_probability: bool,
}

/// Stable `log(1 - exp(x))` for `x <= 0`.
pub fn log1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `log P(C=0 | z) = log(1 - Σ_y p_y(z)^S)`. Requires `s >= 2`.
pub fn log_no_consensus_prob(log_p: &LogProbVector, s: u32) -> Result<NoConsensus> {
    check_labelers(s, 2)?;
    let log_c1 = log_consensus_prob(log_p, s)?;
    if log_c1 > CERTAIN_CONSENSUS_TOL {
        return Ok(NoConsensus {
            log_prob: f64::NEG_INFINITY,
            zero_probability: true,
        });
    }
    Ok(NoConsensus {
        log_prob: log1m_exp(log_c1),
        zero_probability: false,
    })
}

/// Shannon entropy in nats, with `0 * log 0 = 0`.
pub fn entropy(log_p: &LogProbVector) -> f64 {
    let h: f64 = -log_p
        .as_slice()
        .iter()
        .filter(|lp| **lp > LOG_ZERO_CUTOFF)
        .map(|lp| lp.exp() * lp)
        .sum::<f64>();
    h.max(0.0)
}
