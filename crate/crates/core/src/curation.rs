//! Simulated dataset curation.
//!
//! Underlying points `Z` come from an equal-weight Gaussian mixture. Each of
//! `S` IID labelers draws a label from the teacher's `p_y(z)`; a point enters
//! the dataset only when every labeler agrees. Rejected points keep no
//! features, so a separate pool of raw `P(Z)` draws is emitted for estimating
//! the no-consensus term.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{log_softmax, LogProbVector, LogitVector};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct UnderlyingPoint {
    pub z: Vec<f64>,
    /// Mixture component the point was drawn from. Simulator-only.
    pub true_class: usize,
}

/// Labeler response model: `p_y(z) ∝ exp(-‖z - μ_y‖² / temperature)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherModel {
    pub class_centers: Vec<Vec<f64>>,
    pub temperature: f64,
}

impl TeacherModel {
    pub fn validate(&self) -> Result<()> {
        if self.class_centers.len() < 2 {
            return Err(Error::config(
                "teacher.class_centers",
                "need at least 2 class centers",
            ));
        }
        let dim = self.class_centers[0].len();
        if dim == 0 {
            return Err(Error::config("teacher.class_centers", "centers must have dimension >= 1"));
        }
        for (i, c) in self.class_centers.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::config(
                    format!("teacher.class_centers[{i}]"),
                    format!("dimension {} differs from {dim}", c.len()),
                ));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(format!("teacher.class_centers[{i}]"), "non-finite entry"));
            }
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::config("teacher.temperature", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.class_centers.len()
    }

    pub fn dim(&self) -> usize {
        self.class_centers.first().map_or(0, Vec::len)
    }

    /// Same centers, different temperature.
    pub fn with_temperature(&self, temperature: f64) -> Self {
        TeacherModel {
            class_centers: self.class_centers.clone(),
            temperature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurationConfig {
    pub s_labelers: u32,
    pub n_classes: usize,
    pub dim: usize,
    pub teacher: TeacherModel,
    pub mixture_stddev: f64,
    pub labelled_fraction: f64,
    pub n_draws: usize,
    pub seed: u64,
}

impl CurationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_labelers < 1 {
            return Err(Error::config("s_labelers", "must be >= 1"));
        }
        if self.n_classes < 2 {
            return Err(Error::config("n_classes", "must be >= 2"));
        }
        if self.dim < 1 {
            return Err(Error::config("dim", "must be >= 1"));
        }
        self.teacher.validate()?;
        if self.teacher.n_classes() != self.n_classes {
            return Err(Error::config(
                "teacher.class_centers",
                format!("{} centers for {} classes", self.teacher.n_classes(), self.n_classes),
            ));
        }
        if self.teacher.dim() != self.dim {
            return Err(Error::config(
                "teacher.class_centers",
                format!("centers have dimension {}, dim is {}", self.teacher.dim(), self.dim),
            ));
        }
        if !(self.mixture_stddev >= 0.0 && self.mixture_stddev.is_finite()) {
            return Err(Error::config("mixture_stddev", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.labelled_fraction) {
            return Err(Error::config("labelled_fraction", "must lie in [0, 1]"));
        }
        if self.n_draws < 1 {
            return Err(Error::config("n_draws", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleKind {
    Labelled,
    Unlabelled,
    Rejected,
    Pool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CuratedExample {
    pub x: Option<Vec<f64>>,
    pub y: Option<usize>,
    pub kind: ExampleKind,
}

impl CuratedExample {
    pub fn rejected() -> Self {
        CuratedExample {
            x: None,
            y: None,
            kind: ExampleKind::Rejected,
        }
    }

    /// Checks the kind/field pairing.
    pub fn is_consistent(&self) -> bool {
        match self.kind {
            ExampleKind::Rejected => self.x.is_none() && self.y.is_none(),
            ExampleKind::Unlabelled | ExampleKind::Pool => self.x.is_some() && self.y.is_none(),
            ExampleKind::Labelled => self.x.is_some() && self.y.is_some(),
        }
    }
}

/// Curated examples (labelled and unlabelled, in draw order) followed by the
/// raw pool. Rejected draws are only counted.
#[derive(Debug, Clone, PartialEq)]
pub struct CuratedDataset {
    pub examples: Vec<CuratedExample>,
    pub n_rejected: usize,
    pub config: CurationConfig,
}

impl CuratedDataset {
    fn of_kind(&self, kind: ExampleKind) -> impl Iterator<Item = &CuratedExample> {
        self.examples.iter().filter(move |e| e.kind == kind)
    }

    pub fn labelled(&self) -> Vec<(&[f64], usize)> {
        self.of_kind(ExampleKind::Labelled)
            .filter_map(|e| Some((e.x.as_deref()?, e.y?)))
            .collect()
    }

    pub fn unlabelled(&self) -> Vec<&[f64]> {
        self.of_kind(ExampleKind::Unlabelled)
            .filter_map(|e| e.x.as_deref())
            .collect()
    }

    pub fn pool(&self) -> Vec<&[f64]> {
        self.of_kind(ExampleKind::Pool).filter_map(|e| e.x.as_deref()).collect()
    }

    pub fn count(&self, kind: ExampleKind) -> usize {
        if kind == ExampleKind::Rejected {
            return self.n_rejected;
        }
        self.of_kind(kind).count()
    }

    /// Fraction of underlying draws that reached consensus.
    pub fn consensus_rate(&self) -> f64 {
        1.0 - self.n_rejected as f64 / self.config.n_draws as f64
    }
}

/// The augmentation distribution `P(Z_s | Z)`: additive isotropic Gaussian
/// jitter, weak or strong.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationSpec {
    pub noise_stddev_weak: f64,
    pub noise_stddev_strong: f64,
    /// K: augmentations per labelled example.
    pub k_augmentations: usize,
    /// M: Monte-Carlo draws of S-tuples per unlabelled example.
    pub m_tuples: usize,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        AugmentationSpec {
            noise_stddev_weak: 0.0,
            noise_stddev_strong: 0.0,
            k_augmentations: 1,
            m_tuples: 1,
        }
    }
}

impl AugmentationSpec {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("aug.noise_stddev_weak", self.noise_stddev_weak),
            ("aug.noise_stddev_strong", self.noise_stddev_strong),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be finite and >= 0"));
            }
        }
        if self.k_augmentations < 1 {
            return Err(Error::config("aug.k_augmentations", "must be >= 1"));
        }
        if self.m_tuples < 1 {
            return Err(Error::config("aug.m_tuples", "must be >= 1"));
        }
        Ok(())
    }
}

fn draw_point<R: Rng + ?Sized>(config: &CurationConfig, rng: &mut R) -> UnderlyingPoint {
    let class = rng.random_range(0..config.n_classes);
    let z = config.teacher.class_centers[class]
        .iter()
        .map(|c| {
            let eps: f64 = rng.sample(StandardNormal);
            c + config.mixture_stddev * eps
        })
        .collect();
    UnderlyingPoint {
        z,
        true_class: class,
    }
}

/// `n` draws from the class-center mixture, point `i` from stream `(seed, i)`.
pub fn sample_underlying(config: &CurationConfig, n: usize, seed: u64) -> Result<Vec<UnderlyingPoint>> {
    if n == 0 {
        return Err(Error::Empty("sample_underlying needs n >= 1"));
    }
    config.validate()?;
    Ok((0..n as u64)
        .map(|i| draw_point(config, &mut stream(seed, "underlying", i)))
        .collect())
}

pub fn teacher_log_probs(teacher: &TeacherModel, z: &[f64]) -> Result<LogProbVector> {
    if z.len() != teacher.dim() {
        return Err(Error::DimensionMismatch {
            expected: teacher.dim(),
            got: z.len(),
        });
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let logits = teacher
        .class_centers
        .iter()
        .map(|c| {
            let d2: f64 = c.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            -d2 / teacher.temperature
        })
        .collect();
    log_softmax(&LogitVector::new(logits)?)
}

/// `s` IID labels from `exp(log_p)`, drawn from `rng`.
pub fn simulate_labelers_with<R: Rng + ?Sized>(
    log_p: &LogProbVector,
    s: u32,
    rng: &mut R,
) -> Result<Vec<usize>> {
    crate::prob::check_labelers(s, 1)?;
    let weights = WeightedIndex::new(log_p.probs())
        .map_err(|e| Error::InvalidLogProbs(e.to_string()))?;
    Ok((0..s).map(|_| weights.sample(rng)).collect())
}

pub fn simulate_labelers(log_p: &LogProbVector, s: u32, seed: u64) -> Result<Vec<usize>> {
    simulate_labelers_with(log_p, s, &mut stream(seed, "labelers", 0))
}

/// Applies the consensus filter to one labelled draw.
pub fn curate(z: &UnderlyingPoint, labels: &[usize]) -> Result<CuratedExample> {
    let (first, rest) = labels.split_first().ok_or(Error::Empty("labels"))?;
    if rest.iter().all(|l| l == first) {
        Ok(CuratedExample {
            x: Some(z.z.clone()),
            y: Some(*first),
            kind: ExampleKind::Labelled,
        })
    } else {
        Ok(CuratedExample::rejected())
    }
}

/// Runs the full curation process for `config.n_draws` underlying points.
pub fn generate_dataset(config: &CurationConfig) -> Result<CuratedDataset> {
    config.validate()?;
    let seed = config.seed;
    let points = sample_underlying(config, config.n_draws, seed)?;

    let mut curated = Vec::with_capacity(points.len());
    let mut n_rejected = 0;
    for (i, point) in points.iter().enumerate() {
        let log_p = teacher_log_probs(&config.teacher, &point.z)?;
        let labels = simulate_labelers_with(
            &log_p,
            config.s_labelers,
            &mut stream(seed, "labelers", i as u64),
        )?;
        let example = curate(point, &labels)?;
        if example.kind == ExampleKind::Rejected {
            n_rejected += 1;
        } else {
            curated.push(example);
        }
    }

    let n_keep = (config.labelled_fraction * curated.len() as f64).round() as usize;
    let mut keep = vec![false; curated.len()];
    for i in index::sample(&mut stream(seed, "label-mask", 0), curated.len(), n_keep) {
        keep[i] = true;
    }
    for (example, keep) in curated.iter_mut().zip(keep) {
        if !keep {
            example.y = None;
            example.kind = ExampleKind::Unlabelled;
        }
    }

    let pool = sample_underlying(config, config.n_draws, derive_seed(seed, "pool", 0))?;
    curated.extend(pool.into_iter().map(|p| CuratedExample {
        x: Some(p.z),
        y: None,
        kind: ExampleKind::Pool,
    }));

    Ok(CuratedDataset {
        examples: curated,
        n_rejected,
        config: config.clone(),
    })
}

/// Held-out consensus examples `(x, consensus label)`, independent of the
/// training draws.
pub fn generate_test_set(config: &CurationConfig, n: usize, seed: u64) -> Result<Vec<(Vec<f64>, usize)>> {
    config.validate()?;
    let max_attempts = n.saturating_mul(1000).max(1000);
    let mut out = Vec::with_capacity(n);
    let mut attempt = 0u64;
    while out.len() < n {
        if attempt as usize >= max_attempts {
            return Err(Error::config(
                "teacher",
                "consensus rate too low to build a test set",
            ));
        }
        let mut rng = stream(seed, "test", attempt);
        let point = draw_point(config, &mut rng);
        let log_p = teacher_log_probs(&config.teacher, &point.z)?;
        let labels = simulate_labelers_with(&log_p, config.s_labelers, &mut rng)?;
        if let CuratedExample { x: Some(x), y: Some(y), .. } = curate(&point, &labels)? {
            out.push((x, y));
        }
        attempt += 1;
    }
    Ok(out)
}

pub fn augment_with<R: Rng + ?Sized>(z: &[f64], stddev: f64, rng: &mut R) -> Vec<f64> {
    if stddev == 0.0 {
        return z.to_vec();
    }
    z.iter()
        .map(|v| {
            let eps: f64 = rng.sample(StandardNormal);
            v + stddev * eps
        })
        .collect()
}

/// `z + ε`, `ε ~ N(0, stddev² I)`. `stddev = 0` is the identity.
pub fn augment(z: &[f64], stddev: f64, seed: u64) -> Result<Vec<f64>> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if !(stddev >= 0.0 && stddev.is_finite()) {
        return Err(Error::config("stddev", "must be finite and >= 0"));
    }
    Ok(augment_with(z, stddev, &mut stream(seed, "augment", 0)))
}

#[cfg(test)]
pub(crate) fn two_class_config() -> CurationConfig {
    CurationConfig {
        s_labelers: 3,
        n_classes: 2,
        dim: 2,
        teacher: TeacherModel {
            class_centers: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            temperature: 1.0,
        },
        mixture_stddev: 0.7,
        labelled_fraction: 0.3,
        n_draws: 500,
        seed: 11,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::log_consensus_prob;

    #[test]
    fn sample_underlying_rejects_zero() {
        assert!(sample_underlying(&two_class_config(), 0, 1).is_err());
    }

    #[test]
    fn degenerate_mixture_hits_centers() {
        let mut cfg = two_class_config();
        cfg.mixture_stddev = 0.0;
        let pts = sample_underlying(&cfg, 100, 3).unwrap();
        for p in &pts {
            assert_eq!(p.z, cfg.teacher.class_centers[p.true_class]);
        }
        assert!(pts.iter().any(|p| p.true_class == 0));
        assert!(pts.iter().any(|p| p.true_class == 1));
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = two_class_config();
        assert_eq!(sample_underlying(&cfg, 50, 9).unwrap(), sample_underlying(&cfg, 50, 9).unwrap());
        assert_ne!(sample_underlying(&cfg, 50, 9).unwrap(), sample_underlying(&cfg, 50, 10).unwrap());
    }

    #[test]
    fn teacher_examples() {
        let teacher = two_class_config().teacher;
        let lp = teacher_log_probs(&teacher, &[0.5, 0.0]).unwrap();
        let p: Vec<f64> = lp.probs().collect();
        assert!((p[0] - 0.11920292202211755).abs() < 1e-12);
        assert!((p[1] - 0.8807970779778823).abs() < 1e-12);

        let eq = teacher_log_probs(&teacher, &[0.0, 3.0]).unwrap();
        assert!((eq.as_slice()[0] - eq.as_slice()[1]).abs() < 1e-15);

        let cold = teacher.with_temperature(1e-4);
        let lp = teacher_log_probs(&cold, &[0.2, 0.0]).unwrap();
        assert!(lp.as_slice()[1] > -1e-12);

        assert!(matches!(
            teacher_log_probs(&teacher, &[0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(teacher_log_probs(&teacher, &[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn labelers_one_hot_and_deterministic() {
        let hot = LogProbVector::one_hot(3, 5).unwrap();
        assert_eq!(simulate_labelers(&hot, 7, 1).unwrap(), vec![3; 7]);
        let p = LogProbVector::from_probs(&[0.3, 0.3, 0.4]).unwrap();
        assert_eq!(simulate_labelers(&p, 20, 5).unwrap(), simulate_labelers(&p, 20, 5).unwrap());
    }

    #[test]
    fn labeler_frequencies_match_probabilities() {
        let probs = [0.5, 0.3, 0.15, 0.05];
        let p = LogProbVector::from_probs(&probs).unwrap();
        let n = 100_000;
        let labels = simulate_labelers(&p, n, 42).unwrap();
        for (class, &pc) in probs.iter().enumerate() {
            let count = labels.iter().filter(|&&l| l == class).count() as f64;
            let sd = (n as f64 * pc * (1.0 - pc)).sqrt();
            assert!((count - n as f64 * pc).abs() < 3.0 * sd, "class {class}: {count}");
        }
    }

    #[test]
    fn curate_examples() {
        let pt = UnderlyingPoint { z: vec![0.1, 0.2], true_class: 0 };
        let ex = curate(&pt, &[2, 2, 2]).unwrap();
        assert_eq!((ex.kind, ex.y), (ExampleKind::Labelled, Some(2)));
        assert_eq!(ex.x.as_deref(), Some(&[0.1, 0.2][..]));
        let ex = curate(&pt, &[2, 2, 1]).unwrap();
        assert_eq!(ex, CuratedExample::rejected());
        let ex = curate(&pt, &[0]).unwrap();
        assert_eq!((ex.kind, ex.y), (ExampleKind::Labelled, Some(0)));
        assert!(curate(&pt, &[]).is_err());
    }

    #[test]
    fn generate_dataset_invariants() {
        let cfg = two_class_config();
        let ds = generate_dataset(&cfg).unwrap();
        assert!(ds.examples.iter().all(CuratedExample::is_consistent));
        let lab = ds.count(ExampleKind::Labelled);
        let unlab = ds.count(ExampleKind::Unlabelled);
        assert_eq!(lab + unlab + ds.n_rejected, cfg.n_draws);
        assert_eq!(ds.count(ExampleKind::Pool), cfg.n_draws);
        assert_eq!(lab, (0.3 * (lab + unlab) as f64).round() as usize);
        assert!(ds.n_rejected > 0);
        assert_eq!(ds, generate_dataset(&cfg).unwrap());
    }

    #[test]
    fn label_stripping_preserves_consensus_set() {
        let mut cfg = two_class_config();
        cfg.labelled_fraction = 1.0;
        let full = generate_dataset(&cfg).unwrap();
        assert_eq!(full.count(ExampleKind::Unlabelled), 0);
        cfg.labelled_fraction = 0.4;
        let part = generate_dataset(&cfg).unwrap();
        let xs = |d: &CuratedDataset| -> Vec<Vec<f64>> {
            d.examples
                .iter()
                .filter(|e| matches!(e.kind, ExampleKind::Labelled | ExampleKind::Unlabelled))
                .map(|e| e.x.clone().unwrap())
                .collect()
        };
        assert_eq!(xs(&full), xs(&part));
        // Retained labels are the consensus labels.
        for (a, b) in full.examples.iter().zip(&part.examples) {
            if b.kind == ExampleKind::Labelled {
                assert_eq!(a.y, b.y);
            }
        }
    }

    #[test]
    fn cold_teacher_never_rejects() {
        let mut cfg = two_class_config();
        cfg.teacher.temperature = 1e-6;
        cfg.s_labelers = 9;
        assert_eq!(generate_dataset(&cfg).unwrap().n_rejected, 0);
    }

    #[test]
    fn consensus_rate_matches_expectation() {
        let mut cfg = two_class_config();
        cfg.n_draws = 100_000;
        cfg.seed = 5;
        let ds = generate_dataset(&cfg).unwrap();
        // Expected rate from fresh P(Z) draws.
        let fresh = sample_underlying(&cfg, 100_000, 777).unwrap();
        let expected: f64 = fresh
            .iter()
            .map(|p| {
                let lp = teacher_log_probs(&cfg.teacher, &p.z).unwrap();
                log_consensus_prob(&lp, cfg.s_labelers).unwrap().exp()
            })
            .sum::<f64>()
            / fresh.len() as f64;
        let n = cfg.n_draws as f64;
        let sd = (expected * (1.0 - expected) / n).sqrt();
        // Both sides are Monte-Carlo estimates; combine their errors.
        let tol = 3.0 * (2.0f64).sqrt() * sd;
        assert!(
            (ds.consensus_rate() - expected).abs() < tol,
            "{} vs {expected}",
            ds.consensus_rate()
        );
    }

    #[test]
    fn augment_identity_and_moments() {
        let z = [0.3, -1.2];
        assert_eq!(augment(&z, 0.0, 4).unwrap(), z.to_vec());
        let sd = 0.5;
        let n = 100_000;
        let mut rng = stream(13, "aug-test", 0);
        let draws: Vec<Vec<f64>> = (0..n).map(|_| augment_with(&z, sd, &mut rng)).collect();
        for d in 0..2 {
            let mean = draws.iter().map(|v| v[d]).sum::<f64>() / n as f64;
            let var = draws.iter().map(|v| (v[d] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!((mean - z[d]).abs() < 4.0 * sd / (n as f64).sqrt());
            assert!((var / (sd * sd) - 1.0).abs() < 0.05);
        }
        assert!(augment(&[f64::INFINITY], 1.0, 0).is_err());
    }

    #[test]
    fn test_set_has_requested_size() {
        let cfg = two_class_config();
        let test = generate_test_set(&cfg, 200, 8).unwrap();
        assert_eq!(test.len(), 200);
        assert_eq!(test, generate_test_set(&cfg, 200, 8).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut cfg = two_class_config();
        cfg.labelled_fraction = 1.5;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig { field, .. }) if field == "labelled_fraction"));
        let mut cfg = two_class_config();
        cfg.n_classes = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = two_class_config();
        cfg.teacher.temperature = 0.0;
        assert!(cfg.validate().is_err());
    }
}
