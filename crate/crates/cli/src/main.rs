//! `autoembedder` command-line driver.
//!
//! Exit status: 0 on success, 1 for invalid input or configuration, 2 for
//! failures while running.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{CommonArgs, DatasetArgs};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "autoembedder",
    version,
    about = "Constraint-driven embedding and clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an embedder and write model, loss history and manifest
    Train(CommonArgs),
    /// Embed a dataset with a trained model
    Embed {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Seed for the synthetic generator
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "FILE", default_value = "embeddings.csv")]
        out: PathBuf,
        #[command(flatten)]
        dataset: DatasetArgs,
    },
    /// K-means on an embeddings CSV
    Cluster {
        #[arg(long, value_name = "FILE")]
        embeddings: PathBuf,
        #[arg(long, short)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE", default_value = "assignments.csv")]
        out: PathBuf,
    },
    /// Score assignments against true labels
    Eval {
        #[arg(long, value_name = "FILE")]
        assignments: PathBuf,
        /// CSV holding the true labels
        #[arg(long, value_name = "FILE")]
        labels: PathBuf,
        #[arg(long, default_value = "label")]
        label_column: String,
        #[arg(long, value_name = "FILE", default_value = "report.toml")]
        out: PathBuf,
    },
    /// Sampler × loss ablation over several seeds
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(args) => commands::train(&args.resolve()?),
        Command::Embed {
            model,
            config,
            seed,
            out,
            dataset,
        } => {
            let c = commands::dataset_config(config.as_deref(), seed, &dataset)?;
            commands::embed(&c, &model, &out)
        }
        Command::Cluster {
            embeddings,
            k,
            seed,
            out,
        } => commands::cluster(&commands::ClusterArgs {
            embeddings,
            clusters: k,
            seed,
            out,
        }),
        Command::Eval {
            assignments,
            labels,
            label_column,
            out,
        } => commands::eval(&commands::EvalArgs {
            assignments,
            labels,
            label_column,
            out,
        }),
        Command::Bench { common, seeds } => commands::bench(&common.resolve()?, seeds).map(|_| ()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage_error { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
