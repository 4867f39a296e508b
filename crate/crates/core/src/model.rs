//! A tanh multilayer perceptron classifier with hand-written reverse-mode
//! gradients for every objective kind.
//!
//! Objective values always come from [`crate::objectives`]; this module adds
//! the derivative of each objective with respect to the log-probability rows
//! it consumes, pushes that through `log_softmax`, then back through the
//! network. [`finite_diff_grad`] differentiates the value path numerically
//! and serves as the oracle for [`loss_and_grad`].

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{self, AugRole, AugmentedLogProbs, ObjectiveKind, ObjectiveSpec};
use crate::prob::{self, log_softmax, LogProbVector, LogitVector, LOG_ZERO_CUTOFF};
use crate::rng::stream;

/// Flat parameter vector θ. Layer `l` maps `shapes[l] -> shapes[l + 1]` and
/// stores its weights row-major (`out x in`) followed by its biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub shapes: Vec<usize>,
    pub flat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradVector {
    pub flat: Vec<f64>,
}

impl GradVector {
    pub fn zeros(len: usize) -> Self {
        GradVector { flat: vec![0.0; len] }
    }

    pub fn axpy(&mut self, alpha: f64, other: &GradVector) {
        for (a, b) in self.flat.iter_mut().zip(&other.flat) {
            *a += alpha * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.flat.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn param_count(shapes: &[usize]) -> usize {
    shapes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn check_shapes(shapes: &[usize]) -> Result<()> {
    if shapes.is_empty() {
        return Err(Error::Empty("layer shapes"));
    }
    if shapes.len() < 2 {
        return Err(Error::config("shapes", "need at least an input and an output layer"));
    }
    if shapes.contains(&0) {
        return Err(Error::config("shapes", "layer widths must be >= 1"));
    }
    Ok(())
}

impl ModelParams {
    pub fn new(shapes: Vec<usize>, flat: Vec<f64>) -> Result<Self> {
        check_shapes(&shapes)?;
        let expected = param_count(&shapes);
        if flat.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: flat.len(),
            });
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(ModelParams { shapes, flat })
    }

    pub fn zeros(shapes: Vec<usize>) -> Result<Self> {
        let n = param_count(&shapes);
        Self::new(shapes, vec![0.0; n])
    }

    pub fn input_dim(&self) -> usize {
        self.shapes[0]
    }

    pub fn n_classes(&self) -> usize {
        self.shapes[self.shapes.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    /// Offsets of `(weights, biases)` for layer `l`.
    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let start = param_count(&self.shapes[..=l]);
        (start, start + self.shapes[l] * self.shapes[l + 1])
    }

    fn n_layers(&self) -> usize {
        self.shapes.len() - 1
    }
}

/// Weights `N(0, 2 / fan_in)`, biases zero.
pub fn init_params(shapes: &[usize], seed: u64) -> Result<ModelParams> {
    check_shapes(shapes)?;
    let mut rng = stream(seed, "init", 0);
    let mut flat = Vec::with_capacity(param_count(shapes));
    for w in shapes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let sd = (2.0 / fan_in as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            let e: f64 = rng.sample(StandardNormal);
            flat.push(sd * e);
        }
        flat.extend(std::iter::repeat_n(0.0, fan_out));
    }
    ModelParams::new(shapes.to_vec(), flat)
}

/// Layer inputs kept for the backward pass; `acts[0]` is the network input.
struct Trace {
    acts: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

fn forward_trace(params: &ModelParams, x: &[f64]) -> Result<Trace> {
    if x.len() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            got: x.len(),
        });
    }
    let mut acts = vec![x.to_vec()];
    let n_layers = params.n_layers();
    for l in 0..n_layers {
        let (w_off, b_off) = params.layer_offsets(l);
        let (fan_in, fan_out) = (params.shapes[l], params.shapes[l + 1]);
        let input = &acts[l];
        let mut out = params.flat[b_off..b_off + fan_out].to_vec();
        for (o, row) in out.iter_mut().zip(params.flat[w_off..b_off].chunks_exact(fan_in)) {
            *o += row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
        }
        if l + 1 == n_layers {
            return Ok(Trace { acts, logits: out });
        }
        out.iter_mut().for_each(|v| *v = v.tanh());
        acts.push(out);
    }
    unreachable!("check_shapes guarantees at least one layer")
}

/// Accumulates `d(output)/dθ` for an upstream gradient on the logits.
fn backward(params: &ModelParams, trace: &Trace, dlogits: &[f64], grad: &mut [f64]) {
    let mut delta = dlogits.to_vec();
    for l in (0..params.n_layers()).rev() {
        let (w_off, b_off) = params.layer_offsets(l);
        let fan_in = params.shapes[l];
        let input = &trace.acts[l];
        for (o, d) in delta.iter().enumerate() {
            grad[b_off + o] += d;
            let row = &mut grad[w_off + o * fan_in..w_off + (o + 1) * fan_in];
            for (g, a) in row.iter_mut().zip(input) {
                *g += d * a;
            }
        }
        if l == 0 {
            break;
        }
        let weights = &params.flat[w_off..b_off];
        let mut prev = vec![0.0; fan_in];
        for (o, d) in delta.iter().enumerate() {
            for (p, w) in prev.iter_mut().zip(&weights[o * fan_in..(o + 1) * fan_in]) {
                *p += w * d;
            }
        }
        // tanh' = 1 - tanh²
        for (p, a) in prev.iter_mut().zip(input) {
            *p *= 1.0 - a * a;
        }
        delta = prev;
    }
}

pub fn forward(params: &ModelParams, x: &[f64]) -> Result<LogitVector> {
    LogitVector::new(forward_trace(params, x)?.logits)
}

pub fn log_probs(params: &ModelParams, x: &[f64]) -> Result<LogProbVector> {
    log_softmax(&forward(params, x)?)
}

/// One example, prepared for a particular family of objectives.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveInput {
    /// `K >= 1` augmented draws of a labelled point (`K = 1`, unaugmented,
    /// for plain supervised learning).
    Labelled { draws: Vec<Vec<f64>>, label: usize },
    /// A curated point without a label.
    Unlabelled { x: Vec<f64> },
    /// `M` tuples of `S` augmented draws of one unlabelled point. Row 0 of
    /// each tuple is the weak augmentation that picks the pseudo-label.
    Tuples { tuples: Vec<Vec<Vec<f64>>> },
    /// Raw `P(Z)` draws standing in for `n_rejected` rejected observations.
    Pool { points: Vec<Vec<f64>>, n_rejected: u64 },
}

impl ObjectiveInput {
    fn name(&self) -> &'static str {
        match self {
            ObjectiveInput::Labelled { .. } => "labelled",
            ObjectiveInput::Unlabelled { .. } => "unlabelled",
            ObjectiveInput::Tuples { .. } => "tuples",
            ObjectiveInput::Pool { .. } => "pool",
        }
    }

    fn rows(&self) -> Vec<&[f64]> {
        match self {
            ObjectiveInput::Labelled { draws, .. } => draws.iter().map(Vec::as_slice).collect(),
            ObjectiveInput::Unlabelled { x } => vec![x.as_slice()],
            ObjectiveInput::Tuples { tuples } => tuples.iter().flatten().map(Vec::as_slice).collect(),
            ObjectiveInput::Pool { points, .. } => points.iter().map(Vec::as_slice).collect(),
        }
    }
}

fn incompatible(kind: ObjectiveKind, input: &ObjectiveInput) -> Error {
    Error::IncompatibleInput {
        kind: kind.name(),
        input: input.name(),
    }
}

fn build_tuples(lps: &[LogProbVector], shape: &[Vec<Vec<f64>>]) -> Result<Vec<AugmentedLogProbs>> {
    let mut rows = lps.iter();
    shape
        .iter()
        .map(|t| AugmentedLogProbs::new(rows.by_ref().take(t.len()).cloned().collect(), AugRole::STuple))
        .collect()
}

/// Objective value of one example from its rows' log-probabilities.
fn objective_value(
    kind: ObjectiveKind,
    spec: &ObjectiveSpec,
    input: &ObjectiveInput,
    lps: &[LogProbVector],
) -> Result<f64> {
    let s = spec.s_labelers;
    use ObjectiveKind as K;
    match (kind, input) {
        (K::SupervisedConsensus, ObjectiveInput::Labelled { label, .. }) => {
            let mut total = 0.0;
            for lp in lps {
                total += objectives::supervised_consensus_ll(lp, *label, s)?;
            }
            Ok(total / lps.len() as f64)
        }
        (K::AugSingleSample | K::AugMultiSample, ObjectiveInput::Labelled { label, .. }) => {
            let aug = AugmentedLogProbs::new(lps.to_vec(), AugRole::KAugmentations)?;
            if kind == K::AugSingleSample {
                objectives::aug_supervised_single_sample(&aug, *label)
            } else {
                objectives::aug_supervised_multi_sample(&aug, *label)
            }
        }
        (K::UnlabelledExact, ObjectiveInput::Unlabelled { .. }) => objectives::unlabelled_exact_ll(&lps[0], s),
        (K::EntropyBound, ObjectiveInput::Unlabelled { .. }) => objectives::entropy_bound(&lps[0], s),
        (K::PseudoLabelBound, ObjectiveInput::Unlabelled { .. }) => {
            let pl = objectives::select_pseudo_label(&lps[0], spec.pseudo_label_threshold);
            if !pl.accepted {
                return Ok(0.0);
            }
            objectives::pseudo_label_bound(&lps[0], pl.label, s)
        }
        (K::MixmatchJensen, ObjectiveInput::Tuples { tuples }) => {
            objectives::mixmatch_jensen_bound(&build_tuples(lps, tuples)?)
        }
        (K::MixmatchPseudo, ObjectiveInput::Tuples { tuples }) => {
            let tuples = build_tuples(lps, tuples)?;
            let pl = objectives::mixmatch_pseudo_label(&tuples, spec.pseudo_label_threshold)?;
            if !pl.accepted {
                return Ok(0.0);
            }
            objectives::mixmatch_pseudo_bound(&tuples, pl.label)
        }
        (K::NoConsensus, ObjectiveInput::Pool { n_rejected, .. }) => {
            objectives::no_consensus_ll(lps, s, *n_rejected)
        }
        _ => Err(incompatible(kind, input)),
    }
}

/// Maps the pool-degenerate error onto `-inf` so callers can report which
/// example produced it.
fn value_or_neg_inf(
    kind: ObjectiveKind,
    spec: &ObjectiveSpec,
    input: &ObjectiveInput,
    lps: &[LogProbVector],
) -> Result<f64> {
    match objective_value(kind, spec, input, lps) {
        Err(Error::ZeroRejectionProbability) => Ok(f64::NEG_INFINITY),
        other => other,
    }
}

/// Derivative of the objective with respect to every entry of every row's
/// log-probabilities. Pseudo-labels are constants here (stop-gradient).
fn objective_log_prob_grads(
    kind: ObjectiveKind,
    spec: &ObjectiveSpec,
    input: &ObjectiveInput,
    lps: &[LogProbVector],
) -> Result<Vec<Vec<f64>>> {
    let s = f64::from(spec.s_labelers);
    let c = lps[0].n_classes();
    let mut grads = vec![vec![0.0; c]; lps.len()];
    use ObjectiveKind as K;
    match (kind, input) {
        (K::SupervisedConsensus, ObjectiveInput::Labelled { label, .. }) => {
            let k = lps.len() as f64;
            grads.iter_mut().for_each(|g| g[*label] = s / k);
        }
        (K::AugSingleSample, ObjectiveInput::Labelled { label, .. }) => {
            let k = lps.len() as f64;
            grads.iter_mut().for_each(|g| g[*label] = 1.0 / k);
        }
        (K::AugMultiSample, ObjectiveInput::Labelled { label, .. }) => {
            let col: Vec<f64> = lps.iter().map(|lp| lp.as_slice()[*label]).collect();
            for (g, w) in grads.iter_mut().zip(prob::softmax_weights(&col)) {
                g[*label] = w;
            }
        }
        (K::UnlabelledExact, ObjectiveInput::Unlabelled { .. }) => {
            let scaled: Vec<f64> = lps[0].as_slice().iter().map(|v| s * v).collect();
            for (g, w) in grads[0].iter_mut().zip(prob::softmax_weights(&scaled)) {
                *g = s * w;
            }
        }
        (K::EntropyBound, ObjectiveInput::Unlabelled { .. }) => {
            for (g, &lp) in grads[0].iter_mut().zip(lps[0].as_slice()) {
                if lp > LOG_ZERO_CUTOFF {
                    *g = (s - 1.0) * lp.exp() * (lp + 1.0);
                }
            }
        }
        (K::PseudoLabelBound, ObjectiveInput::Unlabelled { .. }) => {
            let pl = objectives::select_pseudo_label(&lps[0], spec.pseudo_label_threshold);
            if pl.accepted {
                grads[0][pl.label] = s;
            }
        }
        (K::MixmatchJensen, ObjectiveInput::Tuples { tuples }) => {
            let m = tuples.len() as f64;
            let mut start = 0;
            for t in &build_tuples(lps, tuples)? {
                let n_rows = t.rows().len();
                let weights = prob::softmax_weights(&objectives::tuple_class_scores(t));
                for g in &mut grads[start..start + n_rows] {
                    for (gy, w) in g.iter_mut().zip(&weights) {
                        *gy = w / m;
                    }
                }
                start += n_rows;
            }
        }
        (K::MixmatchPseudo, ObjectiveInput::Tuples { tuples }) => {
            let built = build_tuples(lps, tuples)?;
            let pl = objectives::mixmatch_pseudo_label(&built, spec.pseudo_label_threshold)?;
            if pl.accepted {
                let y = pl.label;
                let per_tuple: Vec<f64> = built
                    .iter()
                    .map(|t| t.rows().iter().map(|r| r.as_slice()[y]).sum())
                    .collect();
                let mut start = 0;
                for (t, w) in built.iter().zip(prob::softmax_weights(&per_tuple)) {
                    let n_rows = t.rows().len();
                    for g in &mut grads[start..start + n_rows] {
                        g[y] = w;
                    }
                    start += n_rows;
                }
            }
        }
        (K::NoConsensus, ObjectiveInput::Pool { n_rejected, .. }) => {
            if *n_rejected == 0 {
                return Ok(grads);
            }
            // value = n · log mean_i q_i with q_i = 1 - exp(L_i), L_i = lse(s · lp_i)
            let log_q = objectives::pool_log_q(lps, spec.s_labelers)?;
            let pool_weights = prob::softmax_weights(&log_q);
            let n = *n_rejected as f64;
            for ((g, lp), (&lq, &w)) in grads.iter_mut().zip(lps).zip(log_q.iter().zip(&pool_weights)) {
                if w == 0.0 || lq == f64::NEG_INFINITY {
                    continue;
                }
                let scaled: Vec<f64> = lp.as_slice().iter().map(|v| s * v).collect();
                let log_c1 = prob::logsumexp(&scaled)?;
                let dlogq_dl = -(log_c1 - lq).exp();
                for (gy, sw) in g.iter_mut().zip(prob::softmax_weights(&scaled)) {
                    *gy = n * w * dlogq_dl * s * sw;
                }
            }
        }
        _ => return Err(incompatible(kind, input)),
    }
    Ok(grads)
}

/// Pulls a gradient on log-probabilities back to the logits:
/// `dlogits = g - softmax · Σ g`.
fn log_softmax_vjp(lp: &LogProbVector, g: &[f64]) -> Vec<f64> {
    let total: f64 = g.iter().sum();
    g.iter().zip(lp.probs()).map(|(gy, p)| gy - p * total).collect()
}

/// Sum of objective values over `batch` (scored as `kind`) and its exact
/// gradient.
pub fn objective_and_grad(
    params: &ModelParams,
    batch: &[ObjectiveInput],
    spec: &ObjectiveSpec,
    kind: ObjectiveKind,
) -> Result<(f64, GradVector)> {
    let mut grad = GradVector::zeros(params.len());
    let mut total = 0.0;
    for (index, input) in batch.iter().enumerate() {
        let traces = input
            .rows()
            .into_iter()
            .map(|x| forward_trace(params, x))
            .collect::<Result<Vec<_>>>()?;
        if traces.is_empty() {
            return Err(Error::Empty("objective input rows"));
        }
        let lps = traces
            .iter()
            .map(|t| log_softmax(&LogitVector::new(t.logits.clone())?))
            .collect::<Result<Vec<_>>>()?;
        let value = value_or_neg_inf(kind, spec, input, &lps)?;
        if value == f64::NEG_INFINITY {
            return Err(Error::InfiniteObjective {
                kind: kind.name(),
                index,
            });
        }
        total += value;
        let row_grads = objective_log_prob_grads(kind, spec, input, &lps)?;
        for ((trace, lp), g) in traces.iter().zip(&lps).zip(&row_grads) {
            if g.iter().all(|v| *v == 0.0) {
                continue;
            }
            backward(params, trace, &log_softmax_vjp(lp, g), &mut grad.flat);
        }
    }
    Ok((total, grad))
}

/// Sum of objective values over `batch`, without gradients.
pub fn objective_sum(
    params: &ModelParams,
    batch: &[ObjectiveInput],
    spec: &ObjectiveSpec,
    kind: ObjectiveKind,
) -> Result<f64> {
    let mut total = 0.0;
    for (index, input) in batch.iter().enumerate() {
        let lps = input
            .rows()
            .into_iter()
            .map(|x| log_probs(params, x))
            .collect::<Result<Vec<_>>>()?;
        if lps.is_empty() {
            return Err(Error::Empty("objective input rows"));
        }
        let value = value_or_neg_inf(kind, spec, input, &lps)?;
        if value == f64::NEG_INFINITY {
            return Err(Error::InfiniteObjective {
                kind: kind.name(),
                index,
            });
        }
        total += value;
    }
    Ok(total)
}

/// Loss for `spec.kind`: `-w · Σ_i objective_i`, with `w` the weight of the
/// kind's term.
pub fn loss(params: &ModelParams, batch: &[ObjectiveInput], spec: &ObjectiveSpec) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let w = spec.weight(spec.kind.term());
    Ok(-w * objective_sum(params, batch, spec, spec.kind)?)
}

pub fn loss_and_grad(
    params: &ModelParams,
    batch: &[ObjectiveInput],
    spec: &ObjectiveSpec,
) -> Result<(f64, GradVector)> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let w = spec.weight(spec.kind.term());
    let (value, mut grad) = objective_and_grad(params, batch, spec, spec.kind)?;
    grad.flat.iter_mut().for_each(|g| *g *= -w);
    Ok((-w * value, grad))
}

/// Central differences `(f(θ + h e_i) - f(θ - h e_i)) / 2h` per coordinate.
pub fn central_differences<F>(theta: &[f64], step: f64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if step.is_nan() || step <= 0.0 {
        return Err(Error::config("step", "must be > 0"));
    }
    let mut work = theta.to_vec();
    let mut out = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + step;
        let plus = f(&work)?;
        work[i] = orig - step;
        let minus = f(&work)?;
        work[i] = orig;
        out.push((plus - minus) / (2.0 * step));
    }
    Ok(out)
}

pub fn finite_diff_grad(
    params: &ModelParams,
    batch: &[ObjectiveInput],
    spec: &ObjectiveSpec,
    step: f64,
) -> Result<GradVector> {
    let flat = central_differences(&params.flat, step, |theta| {
        let p = ModelParams {
            shapes: params.shapes.clone(),
            flat: theta.to_vec(),
        };
        loss(&p, batch, spec)
    })?;
    Ok(GradVector { flat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Term;

    #[test]
    fn init_counts_and_determinism() {
        let p = init_params(&[2, 3], 1).unwrap();
        assert_eq!(p.len(), 9);
        assert!(p.flat[6..].iter().all(|b| *b == 0.0));
        assert_eq!(p, init_params(&[2, 3], 1).unwrap());
        assert_ne!(p, init_params(&[2, 3], 2).unwrap());
        let deep = init_params(&[2, 8, 3], 4).unwrap();
        assert_eq!(deep.len(), 2 * 8 + 8 + 8 * 3 + 3);
        assert!(deep.flat[16..24].iter().all(|b| *b == 0.0));
        assert!(matches!(init_params(&[], 0), Err(Error::Empty(_))));
        assert!(init_params(&[3], 0).is_err());
    }

    #[test]
    fn init_scale_follows_fan_in() {
        let p = init_params(&[50, 400], 3).unwrap();
        let w = &p.flat[..50 * 400];
        let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        assert!((var / (2.0 / 50.0) - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn forward_examples() {
        let zero = ModelParams::zeros(vec![3, 5, 4]).unwrap();
        let lp = log_probs(&zero, &[1.0, -2.0, 0.5]).unwrap();
        for v in lp.as_slice() {
            assert!((v + 4f64.ln()).abs() < 1e-15);
        }

        // logits = W x + b with W = [[1,2],[3,4],[-1,0]], b = [0.5,-0.5,1]
        let p = ModelParams::new(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 0.5, -0.5, 1.0]).unwrap();
        let out = forward(&p, &[1.0, -1.0]).unwrap();
        assert_eq!(out.as_slice(), &[-0.5, -1.5, 0.0]);

        let hidden = ModelParams::new(vec![1, 1, 2], vec![2.0, 0.5, 1.0, -1.0, 0.0, 0.0]).unwrap();
        let out = forward(&hidden, &[1.0]).unwrap();
        let h = 2.5f64.tanh();
        assert_eq!(out.as_slice(), &[h, -h]);
        assert!(matches!(
            forward(&p, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn scalar_logit() {
        let p = ModelParams::new(vec![1, 1], vec![2.0, 0.5]).unwrap();
        assert_eq!(forward(&p, &[1.0]).unwrap().as_slice(), &[2.5]);
        // A single output is not a classifier.
        assert!(log_probs(&p, &[1.0]).is_err());
    }

    #[test]
    fn central_differences_quadratic() {
        let theta = [0.3, -1.7, 2.0];
        let g = central_differences(&theta, 1e-4, |t| Ok(0.5 * t.iter().map(|v| v * v).sum::<f64>())).unwrap();
        for (a, b) in g.iter().zip(&theta) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(central_differences(&theta, 0.0, |_| Ok(0.0)).is_err());
    }

    fn labelled_batch() -> Vec<ObjectiveInput> {
        vec![
            ObjectiveInput::Labelled { draws: vec![vec![0.4, -0.3]], label: 1 },
            ObjectiveInput::Labelled { draws: vec![vec![-1.0, 0.8]], label: 0 },
        ]
    }

    #[test]
    fn supervised_optimum_has_zero_gradient() {
        // Saturated logits: class 1 has probability exactly 1 in f64.
        let p = ModelParams::new(vec![1, 2], vec![0.0, 0.0, -800.0, 800.0]).unwrap();
        let batch = vec![ObjectiveInput::Labelled { draws: vec![vec![1.0]], label: 1 }];
        let spec = ObjectiveSpec::new(ObjectiveKind::AugSingleSample, 1);
        let (l, g) = loss_and_grad(&p, &batch, &spec).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn weight_scales_gradient_linearly() {
        let p = init_params(&[2, 4, 3], 9).unwrap();
        let spec = ObjectiveSpec::new(ObjectiveKind::AugSingleSample, 2);
        let (l1, g1) = loss_and_grad(&p, &labelled_batch(), &spec).unwrap();
        let spec3 = spec.clone().with_weight(Term::Labelled, 3.0);
        let (l3, g3) = loss_and_grad(&p, &labelled_batch(), &spec3).unwrap();
        assert!((l3 - 3.0 * l1).abs() < 1e-12);
        for (a, b) in g1.flat.iter().zip(&g3.flat) {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
        let spec0 = spec.with_weight(Term::Labelled, 0.0);
        let (_, g0) = loss_and_grad(&p, &labelled_batch(), &spec0).unwrap();
        assert_eq!(g0.max_abs(), 0.0);
        let fd0 = finite_diff_grad(&p, &labelled_batch(), &spec0, 1e-5).unwrap();
        assert_eq!(fd0.max_abs(), 0.0);
    }

    #[test]
    fn incompatible_inputs_error() {
        let p = init_params(&[2, 3], 1).unwrap();
        let spec = ObjectiveSpec::new(ObjectiveKind::EntropyBound, 2);
        assert!(matches!(
            loss_and_grad(&p, &labelled_batch(), &spec),
            Err(Error::IncompatibleInput { kind: "entropy_bound", input: "labelled" })
        ));
        assert!(loss_and_grad(&p, &[], &spec).is_err());
    }

    #[test]
    fn infinite_objective_names_example() {
        // Every pool point certain -> no_consensus is -inf.
        let p = ModelParams::new(vec![1, 2], vec![0.0, 0.0, -800.0, 800.0]).unwrap();
        let spec = ObjectiveSpec::new(ObjectiveKind::NoConsensus, 2).with_weight(Term::Rejected, 1.0);
        let batch = vec![
            ObjectiveInput::Pool { points: vec![vec![0.1]], n_rejected: 0 },
            ObjectiveInput::Pool { points: vec![vec![0.2]], n_rejected: 4 },
        ];
        let err = loss_and_grad(&p, &batch, &spec).unwrap_err();
        assert!(matches!(err, Error::InfiniteObjective { kind: "no_consensus", index: 1 }), "{err}");
    }

    #[test]
    fn pseudo_label_rejected_below_threshold_contributes_nothing() {
        let p = init_params(&[2, 3], 5).unwrap();
        let mut spec = ObjectiveSpec::new(ObjectiveKind::PseudoLabelBound, 3);
        spec.pseudo_label_threshold = 1.0;
        let batch = vec![ObjectiveInput::Unlabelled { x: vec![0.2, 0.1] }];
        let (l, g) = loss_and_grad(&p, &batch, &spec).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g.max_abs(), 0.0);
    }
}
