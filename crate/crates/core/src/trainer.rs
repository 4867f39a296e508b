//! Loss composition, minibatch optimization and evaluation.
//!
//! The training loss follows the curation likelihood: a labelled term, an
//! unlabelled term (the exact consensus objective or one of its bounds) and
//! an optional rejection term, each averaged over its own batch.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curation::{augment_with, AugmentationSpec, CuratedDataset};
use crate::error::{Error, Result};
use crate::model::{
    init_params, log_probs, objective_and_grad, GradVector, ModelParams, ObjectiveInput,
};
use crate::objectives::{self, AugRole, AugmentedLogProbs, ObjectiveKind, ObjectiveSpec, Term};
use crate::rng::{derive_seed, stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

fn default_betas() -> (f64, f64) {
    (0.9, 0.999)
}

fn default_hidden() -> Vec<usize> {
    vec![16]
}

fn default_eval_k() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub aug: AugmentationSpec,
    pub epochs: usize,
    pub batch_size_labelled: usize,
    pub batch_size_unlabelled: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    #[serde(default = "default_betas")]
    pub adam_betas: (f64, f64),
    /// Hidden layer widths of the MLP.
    #[serde(default = "default_hidden")]
    pub hidden_layers: Vec<usize>,
    /// Augmentation draws for the per-epoch multi-sample test log-likelihood.
    #[serde(default = "default_eval_k")]
    pub eval_k: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(objective: ObjectiveSpec, seed: u64) -> Self {
        TrainConfig {
            objective,
            aug: AugmentationSpec::default(),
            epochs: 10,
            batch_size_labelled: 32,
            batch_size_unlabelled: 64,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            adam_betas: default_betas(),
            hidden_layers: default_hidden(),
            eval_k: default_eval_k(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        self.aug.validate()?;
        if self.epochs < 1 {
            return Err(Error::config("train.epochs", "must be >= 1"));
        }
        if self.batch_size_labelled < 1 {
            return Err(Error::config("train.batch_size_labelled", "must be >= 1"));
        }
        if self.batch_size_unlabelled < 1 {
            return Err(Error::config("train.batch_size_unlabelled", "must be >= 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("train.learning_rate", "must be finite and >= 0"));
        }
        let (b1, b2) = self.adam_betas;
        if !(0.0..1.0).contains(&b1) || !(0.0..1.0).contains(&b2) {
            return Err(Error::config("train.adam_betas", "both betas must lie in [0, 1)"));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::config("train.hidden_layers", "widths must be >= 1"));
        }
        if self.eval_k < 1 {
            return Err(Error::config("train.eval_k", "must be >= 1"));
        }
        Ok(())
    }

    pub fn shapes(&self, dim: usize, n_classes: usize) -> Vec<usize> {
        let mut shapes = vec![dim];
        shapes.extend(&self.hidden_layers);
        shapes.push(n_classes);
        shapes
    }
}

/// Mean log-likelihood per observation of each term; `None` when the term
/// was not evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TermValues {
    pub labelled: Option<f64>,
    pub unlabelled: Option<f64>,
    pub rejected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposedLoss {
    pub loss: f64,
    pub grad: GradVector,
    pub terms: TermValues,
}

fn labelled_kind(spec: &ObjectiveSpec) -> ObjectiveKind {
    if spec.kind.term() == Term::Labelled {
        spec.kind
    } else {
        spec.labelled_kind
    }
}

fn rejection_active(spec: &ObjectiveSpec) -> bool {
    spec.weight(Term::Rejected) > 0.0
}

fn unlabelled_active(spec: &ObjectiveSpec) -> bool {
    spec.kind.term() == Term::Unlabelled && spec.weight(Term::Unlabelled) > 0.0
}

fn add_term(
    total: &mut ComposedLoss,
    params: &ModelParams,
    batch: &[ObjectiveInput],
    spec: &ObjectiveSpec,
    kind: ObjectiveKind,
    normalizer: f64,
) -> Result<f64> {
    let w = spec.weight(kind.term());
    let (value, grad) = objective_and_grad(params, batch, spec, kind)?;
    let mean = value / normalizer;
    total.loss -= w * mean;
    total.grad.axpy(-w / normalizer, &grad);
    Ok(mean)
}

/// Builds the training loss for one step.
///
/// Labelled examples get `K` augmentations at the weak stddev. For the
/// MixMatch kinds each unlabelled point becomes `M` tuples of `S` draws: row
/// 0 weak, the rest strong. The rejection term is normalized by `n_rejected`,
/// so it reports the per-observation `log P̂(C=0)`.
#[allow(clippy::too_many_arguments)]
pub fn compose_loss<R: Rng + ?Sized>(
    params: &ModelParams,
    labelled: &[(&[f64], usize)],
    unlabelled: &[&[f64]],
    pool: &[&[f64]],
    n_rejected: u64,
    spec: &ObjectiveSpec,
    aug: &AugmentationSpec,
    rng: &mut R,
) -> Result<ComposedLoss> {
    if labelled.is_empty() && unlabelled.is_empty() && pool.is_empty() {
        return Err(Error::Empty("every batch"));
    }
    let mut total = ComposedLoss {
        loss: 0.0,
        grad: GradVector::zeros(params.len()),
        terms: TermValues::default(),
    };

    if !labelled.is_empty() {
        let batch: Vec<ObjectiveInput> = labelled
            .iter()
            .map(|(x, y)| ObjectiveInput::Labelled {
                draws: (0..aug.k_augmentations)
                    .map(|_| augment_with(x, aug.noise_stddev_weak, rng))
                    .collect(),
                label: *y,
            })
            .collect();
        let v = add_term(&mut total, params, &batch, spec, labelled_kind(spec), batch.len() as f64)?;
        total.terms.labelled = Some(v);
    }

    if unlabelled_active(spec) && !unlabelled.is_empty() {
        let mixmatch = matches!(
            spec.kind,
            ObjectiveKind::MixmatchJensen | ObjectiveKind::MixmatchPseudo
        );
        let batch: Vec<ObjectiveInput> = unlabelled
            .iter()
            .map(|x| {
                if !mixmatch {
                    return ObjectiveInput::Unlabelled { x: x.to_vec() };
                }
                let tuples = (0..aug.m_tuples)
                    .map(|_| {
                        (0..spec.s_labelers)
                            .map(|row| {
                                let sd = if row == 0 {
                                    aug.noise_stddev_weak
                                } else {
                                    aug.noise_stddev_strong
                                };
                                augment_with(x, sd, rng)
                            })
                            .collect()
                    })
                    .collect();
                ObjectiveInput::Tuples { tuples }
            })
            .collect();
        let v = add_term(&mut total, params, &batch, spec, spec.kind, batch.len() as f64)?;
        total.terms.unlabelled = Some(v);
    }

    if rejection_active(spec) && !pool.is_empty() {
        if n_rejected == 0 {
            total.terms.rejected = Some(0.0);
        } else {
            let batch = vec![ObjectiveInput::Pool {
                points: pool.iter().map(|p| p.to_vec()).collect(),
                n_rejected,
            }];
            let v = add_term(
                &mut total,
                params,
                &batch,
                spec,
                ObjectiveKind::NoConsensus,
                n_rejected as f64,
            )?;
            total.terms.rejected = Some(v);
        }
    }
    Ok(total)
}

/// Plain SGD or Adam over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    betas: (f64, f64),
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, betas: (f64, f64), n_params: usize) -> Self {
        Optimizer {
            kind,
            lr,
            betas,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    /// Descends along `grad` (the gradient of a loss to minimize).
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                self.t += 1;
                let (b1, b2) = self.betas;
                let c1 = 1.0 - b1.powi(self.t);
                let c2 = 1.0 - b2.powi(self.t);
                for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                }
            }
        }
    }
}

/// One completed epoch. Everything here is a deterministic function of the
/// config; wall-clock time lives in [`Metrics::epoch_seconds`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub terms: TermValues,
    pub test_accuracy: Option<f64>,
    pub test_ll: Option<f64>,
    pub test_multi_sample_ll: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub records: Vec<EpochRecord>,
    pub epoch_seconds: Vec<f64>,
}

impl Metrics {
    pub fn total_seconds(&self) -> f64 {
        self.epoch_seconds.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Mean `log p_y(x)` on unaugmented inputs (the classic test metric).
    pub plain_ll: f64,
    /// Mean multi-sample bound over `K` augmentations.
    pub multi_sample_ll: f64,
    /// Mean single-sample (mean-of-logs) value on the same draws.
    pub single_sample_ll: f64,
}

/// Accuracy on unaugmented inputs plus the `K`-draw multi-sample
/// log-likelihood (weak stddev, `K = aug.k_augmentations`).
pub fn evaluate(
    params: &ModelParams,
    test: &[(Vec<f64>, usize)],
    aug: &AugmentationSpec,
    seed: u64,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let mut correct = 0usize;
    let (mut plain, mut multi, mut single) = (0.0, 0.0, 0.0);
    for (i, (x, y)) in test.iter().enumerate() {
        let lp = log_probs(params, x)?;
        if lp.argmax() == *y {
            correct += 1;
        }
        plain += lp.get(*y)?;
        let mut rng = stream(seed, "eval", i as u64);
        let rows = (0..aug.k_augmentations)
            .map(|_| log_probs(params, &augment_with(x, aug.noise_stddev_weak, &mut rng)))
            .collect::<Result<Vec<_>>>()?;
        let draws = AugmentedLogProbs::new(rows, AugRole::KAugmentations)?;
        multi += objectives::aug_supervised_multi_sample(&draws, *y)?;
        single += objectives::aug_supervised_single_sample(&draws, *y)?;
    }
    let n = test.len() as f64;
    Ok(EvalReport {
        accuracy: correct as f64 / n,
        plain_ll: plain / n,
        multi_sample_ll: multi / n,
        single_sample_ll: single / n,
    })
}

fn sample_batch<'a, R: Rng + ?Sized>(items: &[&'a [f64]], size: usize, rng: &mut R) -> Vec<&'a [f64]> {
    if items.is_empty() {
        return Vec::new();
    }
    (0..size).map(|_| items[rng.random_range(0..items.len())]).collect()
}

fn first_bad_term(terms: &TermValues) -> &'static str {
    [
        ("labelled", terms.labelled),
        ("unlabelled", terms.unlabelled),
        ("rejected", terms.rejected),
    ]
    .into_iter()
    .find(|(_, v)| v.is_some_and(|v| !v.is_finite()))
    .map_or("loss", |(name, _)| name)
}

fn mean_option(sum: f64, count: usize) -> Option<f64> {
    (count > 0).then(|| sum / count as f64)
}

/// Trains from a fresh initialization. `test` may be empty, in which case the
/// test columns of the metrics are `None`.
pub fn train(
    dataset: &CuratedDataset,
    config: &TrainConfig,
    test: &[(Vec<f64>, usize)],
) -> Result<(ModelParams, Metrics)> {
    config.validate()?;
    let labelled = dataset.labelled();
    if labelled.is_empty() {
        return Err(Error::NoLabelledExamples);
    }
    let unlabelled = dataset.unlabelled();
    let pool = dataset.pool();
    let spec = &config.objective;
    let seed = config.seed;

    let shapes = config.shapes(dataset.config.dim, dataset.config.n_classes);
    let mut params = init_params(&shapes, derive_seed(seed, "init", 0))?;
    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, config.adam_betas, params.len());
    let eval_aug = AugmentationSpec {
        k_augmentations: config.eval_k,
        ..config.aug.clone()
    };

    let mut metrics = Metrics::default();
    let mut order: Vec<usize> = (0..labelled.len()).collect();
    let mut step = 0u64;
    for epoch in 0..config.epochs {
        let started = std::time::Instant::now();
        order.shuffle(&mut stream(seed, "shuffle", epoch as u64));

        let mut loss_sum = 0.0;
        let mut n_steps = 0usize;
        let mut sums = [0.0; 3];
        let mut counts = [0usize; 3];
        for chunk in order.chunks(config.batch_size_labelled) {
            let mut rng: StreamRng = stream(seed, "step", step);
            step += 1;
            let lab: Vec<(&[f64], usize)> = chunk.iter().map(|&i| labelled[i]).collect();
            let unlab = if unlabelled_active(spec) {
                sample_batch(&unlabelled, config.batch_size_unlabelled, &mut rng)
            } else {
                Vec::new()
            };
            let pool_batch = if rejection_active(spec) {
                sample_batch(&pool, config.batch_size_unlabelled, &mut rng)
            } else {
                Vec::new()
            };
            let composed = compose_loss(
                &params,
                &lab,
                &unlab,
                &pool_batch,
                dataset.n_rejected as u64,
                spec,
                &config.aug,
                &mut rng,
            )
            .map_err(|e| match e {
                Error::NonFiniteLogits | Error::InfiniteObjective { .. } => Error::Diverged {
                    epoch,
                    term: "logits",
                },
                other => other,
            })?;
            if !composed.loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    term: first_bad_term(&composed.terms),
                });
            }
            opt.step(&mut params.flat, &composed.grad.flat);
            if params.flat.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    term: "parameters",
                });
            }
            loss_sum += composed.loss;
            n_steps += 1;
            let t = composed.terms;
            for (k, v) in [t.labelled, t.unlabelled, t.rejected].into_iter().enumerate() {
                if let Some(v) = v {
                    sums[k] += v;
                    counts[k] += 1;
                }
            }
        }

        let (test_accuracy, test_ll, test_multi_sample_ll) = if test.is_empty() {
            (None, None, None)
        } else {
            let r = evaluate(&params, test, &eval_aug, derive_seed(seed, "test-eval", 0))?;
            (Some(r.accuracy), Some(r.plain_ll), Some(r.multi_sample_ll))
        };
        metrics.records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n_steps as f64,
            terms: TermValues {
                labelled: mean_option(sums[0], counts[0]),
                unlabelled: mean_option(sums[1], counts[1]),
                rejected: mean_option(sums[2], counts[2]),
            },
            test_accuracy,
            test_ll,
            test_multi_sample_ll,
        });
        metrics.epoch_seconds.push(started.elapsed().as_secs_f64());
        log::debug!(
            "epoch {epoch}: loss {:.5}",
            metrics.records.last().map_or(f64::NAN, |r| r.train_loss)
        );
    }
    Ok((params, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::{generate_dataset, generate_test_set, two_class_config};
    use crate::model::loss_and_grad;

    fn small_dataset() -> CuratedDataset {
        generate_dataset(&two_class_config()).unwrap()
    }

    fn params() -> ModelParams {
        init_params(&[2, 6, 2], 3).unwrap()
    }

    #[test]
    fn supervised_only_reduction() {
        let ds = small_dataset();
        let lab = ds.labelled();
        let unlab = ds.unlabelled();
        let pool = ds.pool();
        let spec = ObjectiveSpec::new(ObjectiveKind::EntropyBound, 3)
            .with_weight(Term::Unlabelled, 0.0);
        let aug = AugmentationSpec::default();
        let p = params();
        let mut rng = stream(0, "t", 0);
        let c = compose_loss(&p, &lab[..10], &unlab[..10], &pool[..10], ds.n_rejected as u64, &spec, &aug, &mut rng)
            .unwrap();
        assert_eq!(c.terms.unlabelled, None);
        assert_eq!(c.terms.rejected, None);

        let batch: Vec<ObjectiveInput> = lab[..10]
            .iter()
            .map(|(x, y)| ObjectiveInput::Labelled { draws: vec![x.to_vec()], label: *y })
            .collect();
        let plain = ObjectiveSpec::new(ObjectiveKind::AugSingleSample, 3);
        let (l, g) = loss_and_grad(&p, &batch, &plain).unwrap();
        assert!((c.loss - l / 10.0).abs() < 1e-12);
        for (a, b) in c.grad.flat.iter().zip(&g.flat) {
            assert!((a - b / 10.0).abs() < 1e-12);
        }
        // Plain cross-entropy by hand.
        let ce: f64 = lab[..10]
            .iter()
            .map(|(x, y)| log_probs(&p, x).unwrap().get(*y).unwrap())
            .sum::<f64>()
            / 10.0;
        assert!((c.terms.labelled.unwrap() - ce).abs() < 1e-12);
    }

    #[test]
    fn exact_term_dominates_entropy_bound() {
        let ds = small_dataset();
        let unlab = ds.unlabelled();
        let p = params();
        let aug = AugmentationSpec::default();
        let term = |kind| {
            let spec = ObjectiveSpec::new(kind, 3);
            compose_loss(&p, &[], &unlab[..50], &[], 0, &spec, &aug, &mut stream(0, "t", 0))
                .unwrap()
                .terms
                .unlabelled
                .unwrap()
        };
        assert!(term(ObjectiveKind::UnlabelledExact) >= term(ObjectiveKind::EntropyBound));
        assert!(term(ObjectiveKind::UnlabelledExact) >= term(ObjectiveKind::PseudoLabelBound));
    }

    #[test]
    fn zero_rejections_contribute_nothing() {
        let ds = small_dataset();
        let lab = ds.labelled();
        let pool = ds.pool();
        let p = params();
        let aug = AugmentationSpec::default();
        let with = ObjectiveSpec::new(ObjectiveKind::UnlabelledExact, 3).with_weight(Term::Rejected, 1.0);
        let without = ObjectiveSpec::new(ObjectiveKind::UnlabelledExact, 3);
        let a = compose_loss(&p, &lab[..5], &[], &pool[..20], 0, &with, &aug, &mut stream(0, "t", 0)).unwrap();
        let b = compose_loss(&p, &lab[..5], &[], &pool[..20], 0, &without, &aug, &mut stream(0, "t", 0)).unwrap();
        assert_eq!(a.terms.rejected, Some(0.0));
        assert_eq!(a.loss, b.loss);
        assert_eq!(a.grad, b.grad);
        let c = compose_loss(&p, &lab[..5], &[], &pool[..20], 7, &with, &aug, &mut stream(0, "t", 0)).unwrap();
        assert!(c.terms.rejected.unwrap() < 0.0);
    }

    #[test]
    fn empty_batches_error() {
        let spec = ObjectiveSpec::new(ObjectiveKind::UnlabelledExact, 3);
        let r = compose_loss(&params(), &[], &[], &[], 0, &spec, &AugmentationSpec::default(), &mut stream(0, "t", 0));
        assert!(r.is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_init() {
        let ds = small_dataset();
        let mut cfg = TrainConfig::new(ObjectiveSpec::new(ObjectiveKind::UnlabelledExact, 3), 4);
        cfg.learning_rate = 0.0;
        cfg.epochs = 2;
        let (p, m) = train(&ds, &cfg, &[]).unwrap();
        let init = init_params(&cfg.shapes(2, 2), derive_seed(4, "init", 0)).unwrap();
        assert_eq!(p, init);
        assert_eq!(m.records.len(), 2);
        assert!(m.records[0].test_accuracy.is_none());
    }

    #[test]
    fn training_is_deterministic() {
        let ds = small_dataset();
        let test = generate_test_set(&ds.config, 100, 1).unwrap();
        let mut cfg = TrainConfig::new(ObjectiveSpec::new(ObjectiveKind::MixmatchPseudo, 3), 8);
        cfg.aug = AugmentationSpec {
            noise_stddev_weak: 0.1,
            noise_stddev_strong: 0.3,
            k_augmentations: 2,
            m_tuples: 2,
        };
        cfg.epochs = 3;
        let a = train(&ds, &cfg, &test).unwrap();
        let b = train(&ds, &cfg, &test).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.records, b.1.records);
    }

    #[test]
    fn no_labels_is_an_error() {
        let mut cfg = two_class_config();
        cfg.labelled_fraction = 0.0;
        let ds = generate_dataset(&cfg).unwrap();
        let tc = TrainConfig::new(ObjectiveSpec::new(ObjectiveKind::UnlabelledExact, 3), 0);
        assert!(matches!(train(&ds, &tc, &[]), Err(Error::NoLabelledExamples)));
    }

    #[test]
    fn divergence_is_reported() {
        let ds = small_dataset();
        let mut cfg = TrainConfig::new(ObjectiveSpec::new(ObjectiveKind::AugSingleSample, 3), 1);
        cfg.optimizer = OptimizerKind::Sgd;
        cfg.learning_rate = 1e308;
        cfg.epochs = 3;
        assert!(matches!(train(&ds, &cfg, &[]), Err(Error::Diverged { epoch: 0, .. })));
    }

    #[test]
    fn evaluate_examples() {
        // Saturated classifier: class = sign of x.
        let perfect = ModelParams::new(vec![1, 2], vec![-800.0, 800.0, 0.0, 0.0]).unwrap();
        let test = vec![(vec![1.0], 1), (vec![-1.0], 0), (vec![2.0], 1)];
        let r = evaluate(&perfect, &test, &AugmentationSpec { k_augmentations: 4, ..Default::default() }, 0).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.multi_sample_ll, 0.0);

        let trained = init_params(&[1, 4, 2], 2).unwrap();
        let r = evaluate(&trained, &test, &AugmentationSpec::default(), 0).unwrap();
        assert_eq!(r.multi_sample_ll, r.plain_ll);

        let uniform = ModelParams::zeros(vec![2, 10]).unwrap();
        let test: Vec<(Vec<f64>, usize)> = (0..100).map(|i| (vec![i as f64, 0.5], i % 10)).collect();
        let aug = AugmentationSpec { noise_stddev_weak: 0.5, k_augmentations: 3, ..Default::default() };
        let r = evaluate(&uniform, &test, &aug, 0).unwrap();
        assert!((r.accuracy - 0.1).abs() < 1e-12);
        assert!((r.multi_sample_ll + 10f64.ln()).abs() < 1e-12);
        assert!(evaluate(&uniform, &[], &aug, 0).is_err());
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.1, (0.9, 0.999), 2);
        let mut p = [1.0, -1.0];
        opt.step(&mut p, &[3.0, -0.5]);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] + 0.9).abs() < 1e-6);
        let mut sgd = Optimizer::new(OptimizerKind::Sgd, 0.1, (0.9, 0.999), 2);
        let mut p = [1.0, -1.0];
        sgd.step(&mut p, &[3.0, -0.5]);
        assert_eq!(p, [1.0 - 0.1 * 3.0, -1.0 + 0.1 * 0.5]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::new(ObjectiveSpec::new(ObjectiveKind::UnlabelledExact, 3), 0);
        assert!(cfg.validate().is_ok());
        cfg.adam_betas = (0.9, 1.0);
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::new(ObjectiveSpec::new(ObjectiveKind::UnlabelledExact, 3), 0);
        cfg.epochs = 0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig { field, .. }) if field == "train.epochs"));
    }
}
