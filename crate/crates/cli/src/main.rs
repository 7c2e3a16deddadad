use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use classrefine_cli::commands::{self, DecomposeArgs, EvalArgs, ExperimentArgs, RefineArgs, SimilarityArgs};
use classrefine_cli::output::Format;

/// Refine class definitions on text embeddings and score detections.
#[derive(Debug, Parser)]
#[command(name = "classrefine", version)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Top concepts of a text's embedding.
    Decompose(DecomposeArgs),
    /// Apply one feedback round to a base text and export the result.
    Refine(RefineArgs),
    /// Score detections against ground truth.
    Eval(EvalArgs),
    /// Replay a multi-user experiment script.
    Experiment(ExperimentArgs),
    /// Pairwise cosine similarity between class texts.
    Similarity(SimilarityArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Decompose(a) => commands::decompose(a, cli.format),
        Command::Refine(a) => commands::refine(a, cli.format),
        Command::Eval(a) => commands::eval(a, cli.format),
        Command::Experiment(a) => commands::experiment(a, cli.format),
        Command::Similarity(a) => commands::similarity(a, cli.format),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|()| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("classrefine: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
