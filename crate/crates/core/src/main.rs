use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use curation_ssl::cli::{self, EXIT_FAILURE, EXIT_OK};
use curation_ssl::verify::Corruption;
use curation_ssl::Error;

#[derive(Parser)]
#[command(name = "curation-ssl", version, about = "Consensus-curation simulator and semi-supervised objectives")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a curated dataset from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on a simulated dataset.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check every bound inequality on random inputs.
    VerifyBounds {
        #[arg(long)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Negative control: add this offset to the entropy bound.
        #[arg(long, hide = true, default_value_t = 0.0)]
        corrupt_entropy_bound: f64,
    },
    /// Evaluate a checkpoint with the K-sample log-likelihood.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        n_test: usize,
        /// Override the checkpoint's weak augmentation stddev.
        #[arg(long)]
        stddev: Option<f64>,
    },
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values always serialize"));
}

fn run(command: Command) -> Result<i32, Error> {
    match command {
        Command::Simulate { config, out } => {
            let summary = cli::cmd_simulate(&config, &out)?;
            eprintln!("wrote dataset to {}", out.display());
            print_json(&summary);
        }
        Command::Train { config, data, out } => {
            let summary = cli::cmd_train(&config, &data, &out)?;
            eprintln!("wrote checkpoint and metrics to {}", out.display());
            print_json(&summary);
        }
        Command::VerifyBounds {
            samples,
            seed,
            corrupt_entropy_bound,
        } => {
            let corruption = Corruption {
                entropy_bound_offset: corrupt_entropy_bound,
            };
            let report = cli::cmd_verify_bounds(samples, seed, corruption)?;
            for check in &report.checks {
                eprintln!(
                    "{} {:<45} checked {:>7}  failed {:>6}  worst {:+.3e}",
                    if check.passed() { "PASS" } else { "FAIL" },
                    check.name,
                    check.checked,
                    check.failed,
                    check.worst
                );
                if let Some(i) = check.first_failure {
                    eprintln!("     first violation at sample {i}; reproduce with --seed {seed} --samples {}", i + 1);
                }
            }
            print_json(&serde_json::to_value(&report).expect("report serializes"));
            if !report.all_passed() {
                return Ok(EXIT_FAILURE);
            }
        }
        Command::Eval {
            checkpoint,
            data,
            k,
            n_test,
            stddev,
        } => {
            let summary = cli::cmd_eval(&checkpoint, &data, k, n_test, stddev)?;
            print_json(&summary);
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let code = match run(args.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            cli::exit_code(&err)
        }
    };
    ExitCode::from(code as u8)
}
