//! `ddakit`: reproducible discriminant-analysis experiments.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod data;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Key, RunConfig, UsageError, SEED_ENV};

#[derive(Parser)]
#[command(
    name = "ddakit",
    version,
    about = "Discriminant-analysis experiments on synthetic data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides as `--key value` or `--key=value`
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "OVERRIDES"
    )]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit LDA on separable and ring-shaped point sets and train a DDA scorer on the rings
    LdaDemo(RunArgs),
    /// Train the per-pixel scorer on synthetic segmentation images
    Train(RunArgs),
    /// Per-image region and boundary metrics for a checkpoint
    Eval(RunArgs),
    /// Class-conditional score histograms and optimal thresholds
    Hist(RunArgs),
}

type Handler = fn(&RunConfig) -> anyhow::Result<()>;

fn run(cli: Cli) -> anyhow::Result<()> {
    let (name, keys, args, handler): (&'static str, Vec<Key>, RunArgs, Handler) = match cli.command
    {
        Command::LdaDemo(a) => ("lda-demo", commands::lda_demo_keys(), a, commands::lda_demo),
        Command::Train(a) => ("train", commands::train_keys(), a, commands::train_cmd),
        Command::Eval(a) => ("eval", commands::eval_keys(), a, commands::eval_cmd),
        Command::Hist(a) => ("hist", commands::hist_keys(), a, commands::hist_cmd),
    };
    let env_seed = keys
        .iter()
        .any(|k| k.name == "seed")
        .then(|| std::env::var(SEED_ENV).ok())
        .flatten();
    let cfg = RunConfig::load(name, &keys, args.config.as_ref(), &args.overrides, env_seed)?;
    handler(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            })
        }
    }
}
