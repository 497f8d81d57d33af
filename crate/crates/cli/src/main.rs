mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use convis::analysis::{Aggregate, Span};
use convis::attribution::{Method, Reduction};
use convis::data::Task;
use convis::Error;

/// Train a text CNN and inspect what it learned.
#[derive(Debug, Parser)]
#[command(name = "convis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArg {
    /// Checkpoint written by `train`.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write a checkpoint, a training report and a manifest.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, required_unless_present = "print_config")]
        out: Option<PathBuf>,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for gradient computation.
        #[arg(long)]
        jobs: Option<usize>,
        /// Print the effective configuration as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Accuracy of a checkpoint on one split.
    Eval {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value = "test", value_parser = ["train", "val", "test"])]
        split: String,
        /// Data configuration; defaults to the one stored in the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-token attribution of one sentence.
    Attribute {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        text: String,
        #[arg(long, default_value = "conv", value_parser = parse_method)]
        method: Method,
        /// Class whose logit saliency is taken; the predicted class by default.
        #[arg(long = "class")]
        class: Option<usize>,
        #[arg(long, value_parser = parse_reduction)]
        reduction: Option<Reduction>,
        /// Report raw scores instead of per-sentence min-max normalized ones.
        #[arg(long)]
        raw: bool,
        /// Also render the heatmap to this SVG file.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Part-of-speech dominance over the test split.
    Dominance {
        #[command(flatten)]
        model: ModelArg,
        /// Must match the checkpoint's task when given.
        #[arg(long, value_parser = parse_task)]
        task: Option<Task>,
        #[arg(long, default_value = "conv", value_parser = parse_method)]
        method: Method,
        #[arg(long, value_parser = parse_reduction)]
        reduction: Option<Reduction>,
        /// Tag sidecar for the test split, one line of tags per example.
        #[arg(long)]
        tags: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank agreement between two dominance reports.
    Agree {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the phrase vectors of two sentences.
    Compare {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Treat `b` as an intensified version of `a` and give a verdict.
        #[arg(long)]
        intensity: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contributions of two clauses to a sentence.
    Decompose {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        sentence: String,
        /// Token range i:j (half-open, zero-based).
        #[arg(long, value_parser = parse_span)]
        clause1: Span,
        #[arg(long, value_parser = parse_span)]
        clause2: Span,
        #[arg(long, default_value = "l1", value_parser = parse_aggregate)]
        aggregate: Aggregate,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a combined sentence with its clauses.
    Compose {
        #[command(flatten)]
        model: ModelArg,
        /// A clause; repeat for each clause.
        #[arg(long = "clause", required = true)]
        clauses: Vec<String>,
        #[arg(long)]
        combined: String,
        #[arg(long, default_value = "l1", value_parser = parse_aggregate)]
        aggregate: Aggregate,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collect misclassified test examples for annotation.
    Triage {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Distribution of annotated error categories.
    Tally {
        /// Lines of `example_id<TAB>category`.
        #[arg(long)]
        annotations: PathBuf,
        /// Triage file whose item ids the annotations must refer to.
        #[arg(long)]
        triage: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render every result file in a directory as an HTML report.
    Report {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a tag lexicon from text tagged as word/TAG.
    Lexicon {
        #[arg(long)]
        tagged: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_reduction(s: &str) -> Result<Reduction, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_span(s: &str) -> Result<Span, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_aggregate(s: &str) -> Result<Aggregate, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Config(_) => EXIT_USAGE,
        Error::Data(_)
        | Error::Parse { .. }
        | Error::Alignment(_)
        | Error::CorruptCheckpoint(_)
        | Error::CheckpointVersion { .. }
        | Error::CheckpointShape(_)
        | Error::Io { .. }
        | Error::Json(_) => EXIT_DATA,
        Error::Shape { .. }
        | Error::Evaluation(_)
        | Error::Contract(_)
        | Error::Diverged { .. }
        | Error::Heatmap(_) => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
