mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CliConfig, Settings};

#[derive(Parser)]
#[command(name = "fstag", version, about = "Feature-structure HMM tagger")]
struct Cli {
    /// key=value settings file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a tagged corpus.
    Train(#[command(flatten)] Settings),
    /// Tag one-word-per-line input.
    Tag(#[command(flatten)] Settings),
    /// Score taggers against a gold corpus.
    Eval(#[command(flatten)] Settings),
    /// Corpus summary and trigram frequency histogram.
    Stats(#[command(flatten)] Settings),
    /// Decompose one transition into its fv-pair conditionals.
    Explain {
        /// t(i-2) t(i-1) t(i) for order 2, t(i-1) t(i) for order 1.
        #[arg(required = true)]
        tags: Vec<String>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Write a synthetic tagged corpus.
    Generate(#[command(flatten)] Settings),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    let resolve = |flags: Settings| CliConfig::resolve(file.clone().overlay(flags));
    match cli.command {
        Command::Train(s) => commands::train(&resolve(s)?),
        Command::Tag(s) => commands::tag(&resolve(s)?),
        Command::Eval(s) => commands::eval(&resolve(s)?),
        Command::Stats(s) => commands::stats(&resolve(s)?),
        Command::Explain { tags, settings } => commands::explain_cmd(&resolve(settings)?, &tags),
        Command::Generate(s) => commands::generate(&resolve(s)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fstag: {e:#}");
            ExitCode::FAILURE
        }
    }
}
