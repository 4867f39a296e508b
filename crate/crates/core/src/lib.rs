//! Consensus-curation model of labelled datasets and the semi-supervised
//! objectives that lower-bound its log-likelihood.
//!
//! - [`prob`]: log-space kernels (`logsumexp`, consensus probabilities).
//! - [`curation`]: the labeler/consensus simulator and augmentation.
//! - [`objectives`]: exact likelihood terms and their lower bounds.
//! - [`model`]: a tanh MLP with reverse-mode gradients for every objective.
//! - [`trainer`]: loss composition, minibatch optimization and evaluation.
//! - [`cli`]: the `curation-ssl` command implementations.

pub mod cli;
pub mod curation;
pub mod dataset;
pub mod error;
pub mod model;
pub mod objectives;
pub mod prob;
pub mod rng;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};
