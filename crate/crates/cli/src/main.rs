mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::PropertyFailure;
use crate::config::GlobalOptions;

/// Spectral filter learning workbench.
#[derive(Debug, Parser)]
#[command(name = "sfl", version, about)]
struct Cli {
    /// Base seed; the SFL_SEED environment variable takes precedence.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON run configuration; explicit flags override its settings.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectrum and frequency-coverage diagnostics of a graph.
    Diagnose(commands::diagnose::Args),
    /// Synthetic filter-learning benchmark on grid graphs.
    Filterbench(commands::filterbench::Args),
    /// Node classification with a linear spectral GNN.
    Train(commands::train::Args),
    /// Executable checks of expressiveness and symmetry results.
    Theory(commands::theory::Args),
    /// Basis and weight-function curves on [0, 2].
    Basisplot(commands::basisplot::Args),
    /// Write a synthetic graph with optional features and labels.
    Generate(commands::generate::Args),
}

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_PROPERTY: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<PropertyFailure>().is_some() {
        return EXIT_PROPERTY;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<sfl_core::Error>() {
            return if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERIC };
        }
    }
    EXIT_INPUT
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let global = GlobalOptions { seed: cli.seed, jobs: cli.jobs, config: cli.config };
    let result = match &cli.command {
        Command::Diagnose(a) => commands::diagnose::run(a, &global),
        Command::Filterbench(a) => commands::filterbench::run(a, &global),
        Command::Train(a) => commands::train::run(a, &global),
        Command::Theory(a) => commands::theory::run(a, &global),
        Command::Basisplot(a) => commands::basisplot::run(a, &global),
        Command::Generate(a) => commands::generate::run(a, &global),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
