//! `spectral-labels`: train, predict, evaluate, generate synthetic data and
//! evaluate sample-complexity bounds.

mod commands;
mod gfmt;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "spectral-labels", version, about = "Spectral method-of-moments multi-label learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a model from a labeled corpus (three passes over the data).
    Train(TrainArgs),
    /// Rank labels for every document of a corpus.
    Predict(PredictArgs),
    /// Macro-averaged AUC and precision@m against the corpus labels.
    Eval(EvalArgs),
    /// Sample ground-truth parameters and a corpus drawn from them.
    Synth(SynthArgs),
    /// Error bounds and sample-size thresholds for a corpus.
    Bounds(BoundsArgs),
    /// Recovery error against ground truth over a grid of corpus sizes.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    /// XᵀX and x⊗x⊗x as written, self-pairs included
    Full,
    /// distinct word pairs and triples only
    Distinct,
}

#[derive(Args)]
struct Parallelism {
    /// Worker threads; 1 runs sequentially and is bitwise reproducible, 0 uses all cores.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct SolverArgs {
    /// Number of latent topics K.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Tensor power method restarts per component [default: 10 + 2K]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    restarts: Option<u64>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    power_iters: u64,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    eig_tol: f64,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    tpm_tol: f64,
    /// Lanczos step budget [default: 10·D]
    #[arg(long)]
    eig_max_iter: Option<usize>,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Full)]
    estimator: EstimatorArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled corpus in the "N D L" header format.
    #[arg(long)]
    data: PathBuf,
    /// Where to write the model.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    par: Parallelism,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Output TSV [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Labels per document [default: all]
    #[arg(long)]
    top: Option<usize>,
    #[arg(long, default_value_t = spectral_labels::DEFAULT_SMOOTHING, value_parser = non_negative)]
    smoothing: f64,
    #[command(flatten)]
    par: Parallelism,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Cutoffs for precision@m.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    at: Vec<usize>,
    /// Also write the report as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = spectral_labels::DEFAULT_SMOOTHING, value_parser = non_negative)]
    smoothing: f64,
    #[command(flatten)]
    par: Parallelism,
}

#[derive(Args)]
struct TruthArgs {
    /// Vocabulary size D.
    #[arg(long, default_value_t = 100)]
    d: usize,
    /// Label count L.
    #[arg(long, default_value_t = 50)]
    l: usize,
    /// Symmetric Dirichlet concentration for π, O and Q.
    #[arg(long, default_value_t = 0.3, value_parser = positive)]
    concentration: f64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    words_per_doc: u64,
    #[arg(long, default_value_t = 3)]
    labels_per_doc: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// Corpus output path.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth model output path.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Documents to generate.
    #[arg(long, default_value_t = 50_000)]
    n: usize,
    #[command(flatten)]
    shape: TruthArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Failure probability δ in (0, 1].
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Optional model whose π supplies π_max/π_min for n1 [default ratio: 1].
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    c1: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    c2: f64,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    eig_tol: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Ground-truth model file; sampled from --d/--l/--concentration when absent.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Corpus sizes, ascending.
    #[arg(long, value_delimiter = ',', default_value = "12500,50000,200000")]
    grid: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// CSV output [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    shape: TruthArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    par: Parallelism,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a non-negative number, got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Eval(a) => commands::eval(a),
        Command::Synth(a) => commands::synth(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Experiment(a) => commands::experiment(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
