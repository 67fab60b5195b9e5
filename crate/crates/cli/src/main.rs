//! Command-line entry point: reproducible training, evaluation, gradient
//! verification, and dataset materialization from one flat config.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use leadr_core::{Error, Result};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "leadr",
    version,
    about = "Lifelong representation learning over a stream of small tasks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the shared representation on a stream of episodes.
    Train(RunArgs),
    /// Evaluate a trained representation against the single-task baseline.
    Eval(RunArgs),
    /// Verify analytic gradients against central finite differences.
    Gradcheck(RunArgs),
    /// Materialize a synthetic family as three disjoint partition CSVs.
    Simulate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file of flat `key = value` lines; '#' starts a comment.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Root seed; overrides the config file's `seed`.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Run directory for all outputs (default: runs/<timestamp>-seed<seed>).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override one config key, repeatable: --set train.learning_rate=0.02
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (args, which) = match &cli.command {
        Command::Train(args) => (args, "train"),
        Command::Eval(args) => (args, "eval"),
        Command::Gradcheck(args) => (args, "gradcheck"),
        Command::Simulate(args) => (args, "simulate"),
    };
    let config = RunConfig::load(args.config.as_deref(), args.seed, &args.sets)?;
    let out = match &args.out {
        Some(dir) => dir.clone(),
        None => default_out_dir(config.seed()?),
    };
    match which {
        "train" => commands::cmd_train(&config, &out).map(|()| true),
        "eval" => commands::cmd_eval(&config, &out).map(|()| true),
        "gradcheck" => commands::cmd_gradcheck(&config, &out),
        _ => commands::cmd_simulate(&config, &out).map(|()| true),
    }
}

fn default_out_dir(seed: u64) -> PathBuf {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    PathBuf::from("runs").join(format!("{timestamp}-seed{seed}"))
}

/// 2 for configuration and shape problems, 3 for data and file problems,
/// 4 for numeric failures. Gradcheck failures exit 1 without an error.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Shape(_) => 2,
        Error::Data(_)
        | Error::Parse { .. }
        | Error::Label { .. }
        | Error::Metric(_)
        | Error::Io(_) => 3,
        Error::Numeric(_) | Error::StaleTrace => 4,
    }
}
