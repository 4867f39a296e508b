#![allow(dead_code)]

use curation_ssl::model::{init_params, ModelParams, ObjectiveInput};
use curation_ssl::objectives::{ObjectiveKind, ObjectiveSpec, Term};
use curation_ssl::prob::{log_softmax, LogProbVector, LogitVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random point on the simplex, from Gaussian logits at a random scale so
/// that both flat and sharply peaked distributions show up.
pub fn simplex_point(rng: &mut impl Rng, c: usize) -> LogProbVector {
    let scale = (rng.random_range(-3.0..3.0f64)).exp();
    let logits: Vec<f64> = (0..c)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    log_softmax(&LogitVector::new(logits).unwrap()).unwrap()
}

fn point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// A random `(params, batch, spec)` gradient-check instance on a 2->8->3 MLP.
pub fn gradient_instance(
    kind: ObjectiveKind,
    seed: u64,
) -> (ModelParams, Vec<ObjectiveInput>, ObjectiveSpec) {
    let mut r = rng(seed);
    let params = init_params(&[2, 8, 3], seed).unwrap();
    let s = r.random_range(2..=4u32);
    let spec = ObjectiveSpec::new(kind, s).with_weight(Term::Rejected, 1.0);
    let batch = (0..3)
        .map(|_| match kind.term() {
            Term::Labelled => ObjectiveInput::Labelled {
                draws: (0..r.random_range(1..=4)).map(|_| point(&mut r, 2)).collect(),
                label: r.random_range(0..3),
            },
            Term::Unlabelled => match kind {
                ObjectiveKind::MixmatchJensen | ObjectiveKind::MixmatchPseudo => {
                    ObjectiveInput::Tuples {
                        tuples: (0..r.random_range(1..=3))
                            .map(|_| (0..s).map(|_| point(&mut r, 2)).collect())
                            .collect(),
                    }
                }
                _ => ObjectiveInput::Unlabelled { x: point(&mut r, 2) },
            },
            Term::Rejected => ObjectiveInput::Pool {
                points: (0..4).map(|_| point(&mut r, 2)).collect(),
                n_rejected: r.random_range(1..=5),
            },
        })
        .collect();
    (params, batch, spec)
}

/// Worst relative error between two gradients; coordinates where both are
/// below `1e-8` in magnitude are compared absolutely.
pub fn worst_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| {
            let scale = a.abs().max(n.abs());
            if scale < 1e-8 {
                (a - n).abs()
            } else {
                (a - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}
