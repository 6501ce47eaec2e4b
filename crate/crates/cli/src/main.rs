//! `wso`: phantom synthesis, feature extraction, training, tuning,
//! cross-validation, prediction maps and attributions.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "wso", version, about = "Weakly-supervised ordinal SVM toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic multi-contrast stack from a config file.
    Synth(SynthArgs),
    /// Pick biopsy, unlabeled and normal centers on a stack.
    Sample(SampleArgs),
    /// Extract window features at the given centers.
    Extract(ExtractArgs),
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Two-stage C2 / C1 search.
    Tune(TuneArgs),
    /// Repeated stratified cross-validation.
    Cv(CvArgs),
    /// Sliding-window prediction maps over the tumoral AOI.
    Map(MapArgs),
    /// Shapley attributions per contrast.
    Explain(ExplainArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Flat `key = value` file; keys: width, height, seed, noise, texture.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub stack: PathBuf,
    #[arg(long)]
    pub gene: String,
    #[arg(long, default_value_t = 40)]
    pub biopsies: usize,
    #[arg(long, default_value_t = 40)]
    pub unlabeled: usize,
    #[arg(long, default_value_t = 40)]
    pub normal: usize,
    /// Minimum fraction of a biopsy window sharing the center's label.
    #[arg(long)]
    pub purity: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub min_separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[arg(long)]
    pub stack: PathBuf,
    #[arg(long)]
    pub centers: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelArg {
    Linear,
    Gaussian,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
    pub kernel: KernelArg,
    /// Fixed Gaussian width; without it the median heuristic is used.
    #[arg(long, conflicts_with = "median")]
    pub gamma: Option<f64>,
    /// Median-distance Gaussian width (the default).
    #[arg(long)]
    pub median: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    /// Gene name recorded in the model file.
    #[arg(long, default_value = "gene")]
    pub gene: String,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 0.8)]
    pub screen_threshold: f64,
    /// Comma-separated ascending C1 values.
    #[arg(long, value_delimiter = ',')]
    pub c1_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub c2_grid: Option<Vec<f64>>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug)]
pub struct CvArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 30)]
    pub repeats: usize,
    /// Train without unlabeled tumoral samples.
    #[arg(long)]
    pub ablation: bool,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug)]
pub struct MapArgs {
    /// `gene=path` pairs; repeat for several genes.
    #[arg(long = "model", required = true)]
    pub models: Vec<String>,
    #[arg(long)]
    pub stack: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Combined map of two genes given with --model.
    #[arg(long, num_args = 2, value_names = ["GENE_A", "GENE_B"])]
    pub joint: Option<Vec<String>>,
    /// Re-train each model on this dataset's biopsies plus unlabeled and
    /// normal samples drawn from the stack, with the model's C1, C2 and kernel.
    #[arg(long)]
    pub retrain: Option<PathBuf>,
    /// Unlabeled and normal samples drawn for re-training, each.
    #[arg(long, default_value_t = 40)]
    pub retrain_count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Exact,
    Sampled,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggArg {
    SumThenAbs,
    AbsThenSum,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoleArg {
    Biopsy,
    Unlabeled,
    Normal,
    All,
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 2000)]
    pub draws: usize,
    #[arg(long, value_enum, default_value_t = AggArg::SumThenAbs)]
    pub aggregation: AggArg,
    #[arg(long, value_enum, default_value_t = RoleArg::Biopsy)]
    pub role: RoleArg,
    /// Explain at most this many rows.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Extract(a) => commands::extract(&a),
        Command::Train(a) => commands::train(&a),
        Command::Tune(a) => commands::tune(&a),
        Command::Cv(a) => commands::cv(&a),
        Command::Map(a) => commands::map(&a),
        Command::Explain(a) => commands::explain(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
