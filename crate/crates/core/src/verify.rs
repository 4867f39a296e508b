//! Randomized check of every bound inequality over simplex points and
//! augmentation draws. Backs the `verify-bounds` command.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::Result;
use crate::objectives::{
    aug_supervised_multi_sample, aug_supervised_single_sample, entropy_bound,
    mixmatch_jensen_bound, mixmatch_pseudo_bound, pseudo_label_bound, unlabelled_exact_ll, AugRole,
    AugmentedLogProbs,
};
use crate::prob::{log_consensus_prob, log_no_consensus_prob, log_softmax, LogProbVector, LogitVector};
use crate::rng::stream;

pub const BOUND_TOL: f64 = 1e-9;
pub const JENSEN_TOL: f64 = 1e-12;
pub const CLASS_COUNTS: [usize; 3] = [2, 10, 100];
pub const MAX_LABELERS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// `slack = upper - lower` must be `>= -tolerance`.
    Inequality,
    /// `|a - b|` must be `<= tolerance`.
    Equality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub kind: CheckKind,
    pub tolerance: f64,
    pub checked: u64,
    pub failed: u64,
    /// Smallest slack for inequalities, largest gap for equalities.
    pub worst: f64,
    /// Sample index of the first violation; rerun with the same seed.
    pub first_failure: Option<u64>,
}

impl CheckResult {
    fn new(name: &'static str, kind: CheckKind, tolerance: f64) -> Self {
        CheckResult {
            name,
            kind,
            tolerance,
            checked: 0,
            failed: 0,
            worst: match kind {
                CheckKind::Inequality => f64::INFINITY,
                CheckKind::Equality => 0.0,
            },
            first_failure: None,
        }
    }

    fn record(&mut self, sample: u64, value: f64) {
        self.checked += 1;
        let ok = match self.kind {
            CheckKind::Inequality => {
                self.worst = self.worst.min(value);
                value >= -self.tolerance
            }
            CheckKind::Equality => {
                let gap = value.abs();
                self.worst = self.worst.max(gap);
                gap <= self.tolerance
            }
        };
        if !ok {
            self.failed += 1;
            self.first_failure.get_or_insert(sample);
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0 && self.checked > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub samples: u64,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl BoundReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }
}

/// Deliberate corruption for negative-control runs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Corruption {
    /// Added to every entropy-bound value.
    pub entropy_bound_offset: f64,
}

pub fn random_simplex_point<R: Rng + ?Sized>(rng: &mut R, n_classes: usize) -> Result<LogProbVector> {
    let scale = rng.random_range(-3.0f64..3.0).exp();
    let logits = (0..n_classes)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    log_softmax(&LogitVector::new(logits)?)
}

fn rows<R: Rng + ?Sized>(rng: &mut R, n: usize, c: usize, role: AugRole) -> Result<AugmentedLogProbs> {
    let rows = (0..n)
        .map(|_| random_simplex_point(rng, c))
        .collect::<Result<Vec<_>>>()?;
    AugmentedLogProbs::new(rows, role)
}

/// Runs `samples` random cases of every check. Case `i` draws from its own
/// stream, so a failure reproduces from `(seed, i)` alone.
pub fn verify_bounds(samples: u64, seed: u64, corruption: Corruption) -> Result<BoundReport> {
    use CheckKind::{Equality, Inequality};
    let mut entropy_chain = CheckResult::new("entropy_bound <= exact", Inequality, BOUND_TOL);
    let mut pseudo_chain = CheckResult::new("pseudo_label_bound <= exact (every y*)", Inequality, BOUND_TOL);
    let mut one_hot = CheckResult::new("one-hot tightness (entropy and pseudo-label)", Equality, BOUND_TOL);
    let mut uniform = CheckResult::new("uniform tightness (entropy bound)", Equality, BOUND_TOL);
    let mut monotone_s = CheckResult::new("log P(C=1) non-increasing in S", Inequality, BOUND_TOL);
    let mut complement = CheckResult::new("P(C=1) + P(C=0) = 1", Equality, BOUND_TOL);
    let mut multi_single = CheckResult::new("aug multi-sample >= single-sample", Inequality, JENSEN_TOL);
    let mut k1 = CheckResult::new("aug multi-sample = single-sample at K=1", Equality, 0.0);
    let mut mixmatch = CheckResult::new("mixmatch pseudo <= jensen (M=1, every y*)", Inequality, JENSEN_TOL);

    for i in 0..samples {
        let mut rng = stream(seed, "verify", i);
        let c = CLASS_COUNTS[(i % CLASS_COUNTS.len() as u64) as usize];
        let s = rng.random_range(1..=MAX_LABELERS);
        let p = random_simplex_point(&mut rng, c)?;

        let exact = unlabelled_exact_ll(&p, s)?;
        let ent = entropy_bound(&p, s)? + corruption.entropy_bound_offset;
        entropy_chain.record(i, exact - ent);
        let worst_pseudo = (0..c)
            .map(|y| pseudo_label_bound(&p, y, s).map(|b| exact - b))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        pseudo_chain.record(i, worst_pseudo);

        let hot_class = rng.random_range(0..c);
        let hot = LogProbVector::one_hot(hot_class, c)?;
        let hot_exact = unlabelled_exact_ll(&hot, s)?;
        let hot_ent = entropy_bound(&hot, s)? + corruption.entropy_bound_offset;
        let hot_pseudo = pseudo_label_bound(&hot, hot_class, s)?;
        one_hot.record(i, (hot_exact - hot_ent).abs().max((hot_exact - hot_pseudo).abs()));

        let uni = LogProbVector::uniform(c)?;
        let uni_ent = entropy_bound(&uni, s)? + corruption.entropy_bound_offset;
        uniform.record(i, unlabelled_exact_ll(&uni, s)? - uni_ent);

        monotone_s.record(i, log_consensus_prob(&p, s)? - log_consensus_prob(&p, s + 1)?);
        if s >= 2 {
            let none = log_no_consensus_prob(&p, s)?;
            if !none.zero_probability {
                complement.record(i, exact.exp() + none.log_prob.exp() - 1.0);
            }
        }

        let k = rng.random_range(1..=16);
        let y = rng.random_range(0..c);
        let draws = rows(&mut rng, k, c, AugRole::KAugmentations)?;
        let gap = aug_supervised_multi_sample(&draws, y)? - aug_supervised_single_sample(&draws, y)?;
        multi_single.record(i, gap);
        let single_draw = rows(&mut rng, 1, c, AugRole::KAugmentations)?;
        k1.record(
            i,
            aug_supervised_multi_sample(&single_draw, y)? - aug_supervised_single_sample(&single_draw, y)?,
        );

        let tuple = [rows(&mut rng, s as usize, c, AugRole::STuple)?];
        let jensen = mixmatch_jensen_bound(&tuple)?;
        let worst = (0..c)
            .map(|y| mixmatch_pseudo_bound(&tuple, y).map(|b| jensen - b))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        mixmatch.record(i, worst);
    }

    Ok(BoundReport {
        samples,
        seed,
        checks: vec![
            entropy_chain,
            pseudo_chain,
            one_hot,
            uniform,
            monotone_s,
            complement,
            multi_single,
            k1,
            mixmatch,
        ],
    })
}
