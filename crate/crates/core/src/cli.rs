//! Implementations of the `curation-ssl` subcommands.
//!
//! Each command returns the JSON summary that `main` prints on stdout; files
//! are written only under the given output paths. Errors map onto exit codes
//! through [`exit_code`].

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::curation::{generate_dataset, generate_test_set, AugmentationSpec, CurationConfig, ExampleKind};
use crate::dataset::{io_err, json_err, read_dataset, read_header, read_json, write_dataset, write_json};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::derive_seed;
use crate::trainer::{evaluate, train, TrainConfig};
use crate::verify::{verify_bounds, BoundReport, Corruption};

pub const CONFIG_VERSION: &str = "1";
pub const CHECKPOINT_VERSION: &str = "1";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const METRICS_FILE: &str = "metrics.jsonl";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

fn default_n_test() -> usize {
    1000
}

/// Experiment config file. `train` is required only by the `train` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: String,
    pub curation: CurationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    /// Size of the held-out consensus test set.
    #[serde(default = "default_n_test")]
    pub n_test: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::config(
                "version",
                format!("expected \"{CONFIG_VERSION}\", got {:?}", self.version),
            ));
        }
        self.curation.validate()?;
        if let Some(t) = &self.train {
            t.validate()?;
        }
        if self.n_test < 1 {
            return Err(Error::config("n_test", "must be >= 1"));
        }
        Ok(())
    }
}

pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_str(text).map_err(json_err(path))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: String,
    pub seed: u64,
    pub shapes: Vec<usize>,
    /// Augmentation used in training; the default for `eval`.
    pub aug: AugmentationSpec,
    pub flat: Vec<f64>,
}

impl Checkpoint {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.shapes.clone(), self.flat.clone())
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let ck: Checkpoint = read_json(path)?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("unsupported checkpoint version {:?}", ck.version),
        });
    }
    ck.params()?;
    Ok(ck)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. }
        | Error::Json { .. }
        | Error::Format { .. }
        | Error::InvalidConfig { .. }
        | Error::DimensionMismatch { .. }
        | Error::NoLabelledExamples
        | Error::IncompatibleInput { .. } => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn test_set_seed(curation: &CurationConfig) -> u64 {
    derive_seed(curation.seed, "test-set", 0)
}

pub fn cmd_simulate(config_path: &Path, out_dir: &Path) -> Result<Value> {
    let config = load_config(config_path)?;
    let dataset = generate_dataset(&config.curation)?;
    write_dataset(&dataset, out_dir)?;
    Ok(json!({
        "counts": {
            "labelled": dataset.count(ExampleKind::Labelled),
            "unlabelled": dataset.count(ExampleKind::Unlabelled),
            "rejected": dataset.n_rejected,
            "pool": dataset.count(ExampleKind::Pool),
        },
        "n_draws": config.curation.n_draws,
        "n_rejected": dataset.n_rejected,
        "empirical_consensus_rate": dataset.consensus_rate(),
        "config": config,
    }))
}

pub fn cmd_train(config_path: &Path, data_dir: &Path, out_dir: &Path) -> Result<Value> {
    let config = load_config(config_path)?;
    let train_config = config
        .train
        .clone()
        .ok_or_else(|| Error::config("train", "missing train section"))?;
    let dataset = read_dataset(data_dir)?;
    let test = generate_test_set(&dataset.config, config.n_test, test_set_seed(&dataset.config))?;
    let (params, metrics) = train(&dataset, &train_config, &test)?;

    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let checkpoint = Checkpoint {
        version: CHECKPOINT_VERSION.to_string(),
        seed: train_config.seed,
        shapes: params.shapes.clone(),
        aug: train_config.aug.clone(),
        flat: params.flat,
    };
    write_json(&out_dir.join(CHECKPOINT_FILE), &checkpoint)?;

    let metrics_path = out_dir.join(METRICS_FILE);
    let file = File::create(&metrics_path).map_err(io_err(&metrics_path))?;
    let mut out = BufWriter::new(file);
    for record in &metrics.records {
        serde_json::to_writer(&mut out, record).map_err(json_err(&metrics_path))?;
        out.write_all(b"\n").map_err(io_err(&metrics_path))?;
    }
    out.flush().map_err(io_err(&metrics_path))?;

    let last = metrics.records.last();
    Ok(json!({
        "config": config,
        "epochs": metrics.records.len(),
        "final_train_loss": last.map(|r| r.train_loss),
        "final_accuracy": last.and_then(|r| r.test_accuracy),
        "final_test_ll": last.and_then(|r| r.test_ll),
        "final_multi_sample_ll": last.and_then(|r| r.test_multi_sample_ll),
        "wall_clock_seconds": metrics.total_seconds(),
    }))
}

pub fn cmd_verify_bounds(samples: u64, seed: u64, corruption: Corruption) -> Result<BoundReport> {
    if samples < 1 {
        return Err(Error::config("samples", "must be >= 1"));
    }
    verify_bounds(samples, seed, corruption)
}

/// Evaluates a checkpoint on the held-out test set of the dataset's config.
pub fn cmd_eval(
    checkpoint_path: &Path,
    data_dir: &Path,
    k: usize,
    n_test: usize,
    stddev: Option<f64>,
) -> Result<Value> {
    if k < 1 {
        return Err(Error::config("k", "must be >= 1"));
    }
    if n_test < 1 {
        return Err(Error::config("n_test", "must be >= 1"));
    }
    let checkpoint = load_checkpoint(checkpoint_path)?;
    let params = checkpoint.params()?;
    let header = read_header(data_dir)?;
    let curation = &header.config;
    if params.input_dim() != curation.dim {
        return Err(Error::DimensionMismatch {
            expected: curation.dim,
            got: params.input_dim(),
        });
    }
    if params.n_classes() != curation.n_classes {
        return Err(Error::DimensionMismatch {
            expected: curation.n_classes,
            got: params.n_classes(),
        });
    }
    let mut aug = checkpoint.aug.clone();
    if let Some(sd) = stddev {
        aug.noise_stddev_weak = sd;
    }
    aug.k_augmentations = k;
    aug.validate()?;
    let test = generate_test_set(curation, n_test, test_set_seed(curation))?;
    let report = evaluate(&params, &test, &aug, derive_seed(checkpoint.seed, "eval", 0))?;
    Ok(json!({
        "accuracy": report.accuracy,
        "ll_k1": report.plain_ll,
        "ll_k": report.multi_sample_ll,
        "single_sample_ll_k": report.single_sample_ll,
        "k": k,
        "stddev": aug.noise_stddev_weak,
        "n_test": n_test,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "version": "1",
        "curation": {
            "s_labelers": 3, "n_classes": 2, "dim": 2,
            "teacher": {"class_centers": [[-1.0, 0.0], [1.0, 0.0]], "temperature": 1.0},
            "mixture_stddev": 0.7, "labelled_fraction": 0.2, "n_draws": 300, "seed": 3
        },
        "train": {
            "objective": {"kind": "entropy_bound", "s_labelers": 3},
            "epochs": 2, "batch_size_labelled": 16, "batch_size_unlabelled": 16,
            "learning_rate": 0.01, "optimizer": "adam", "seed": 5
        },
        "n_test": 50
    }"#;

    #[test]
    fn config_parses_and_round_trips() {
        let cfg = parse_config(CONFIG, Path::new("cfg.json")).unwrap();
        let echoed = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&echoed, Path::new("echo")).unwrap(), cfg);
    }

    #[test]
    fn unknown_fields_are_errors() {
        let typo = CONFIG.replace("\"learning_rate\"", "\"learning_rat\"");
        let err = parse_config(&typo, Path::new("cfg.json")).unwrap_err();
        assert!(err.to_string().contains("learning_rat"), "{err}");
        assert_eq!(exit_code(&err), EXIT_USAGE);

        let versionless = CONFIG.replace("\"version\": \"1\",", "");
        assert!(parse_config(&versionless, Path::new("cfg.json")).is_err());
        let wrong = CONFIG.replace("\"version\": \"1\"", "\"version\": \"2\"");
        assert!(parse_config(&wrong, Path::new("cfg.json")).is_err());
    }

    #[test]
    fn field_level_validation_message() {
        let bad = CONFIG.replace("\"labelled_fraction\": 0.2", "\"labelled_fraction\": 2.0");
        let err = parse_config(&bad, Path::new("cfg.json")).unwrap_err();
        assert!(err.to_string().contains("labelled_fraction"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NoLabelledExamples), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Diverged { epoch: 0, term: "x" }), EXIT_FAILURE);
    }
}
