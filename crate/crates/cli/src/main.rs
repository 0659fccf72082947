use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emocause::eval::Variant;

mod commands;
mod manifest;
mod settings;

use settings::{ModelArgs, TrainArgs, SEED_ENV};

/// Emotion-cause clause classification: data generation, training,
/// evaluation and ablations.
#[derive(Parser, Debug)]
#[command(name = "emocause", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic corpus.
    Generate(GenerateArgs),
    /// Train a model and write a checkpoint.
    Train(TrainCmdArgs),
    /// Score a checkpoint on a corpus.
    Eval(EvalArgs),
    /// Train and evaluate model variants over seeded repetitions.
    Ablate(AblateArgs),
    /// Finite-difference check of every gradient of the full model.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Settings file or manifest; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of documents.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub docs: Option<u64>,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_clauses: Option<usize>,
    #[arg(long)]
    pub max_clauses: Option<usize>,
    #[arg(long)]
    pub min_clause_len: Option<usize>,
    #[arg(long)]
    pub max_clause_len: Option<usize>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub marker_count: Option<usize>,
    /// Probability that a cause clause carries a marker word.
    #[arg(long)]
    pub content_signal: Option<f64>,
    /// Probability that a non-cause clause carries a marker word.
    #[arg(long)]
    pub distractor_rate: Option<f64>,
    /// Same, for a non-cause emotion clause.
    #[arg(long)]
    pub emotion_distractor_rate: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TrainCmdArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Checkpoint path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Preset for the architecture switches, applied before individual flags.
    #[arg(long)]
    pub variant: Option<Variant>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Fill the label history with gold labels instead of predictions.
    #[arg(long)]
    pub oracle_dgl: bool,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_oov_rate: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Results file (line-delimited JSON); the table is written beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated variant names.
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<Variant>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Write 0 for wall-clock fields so results files are reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Ablate(a) => commands::ablate(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
