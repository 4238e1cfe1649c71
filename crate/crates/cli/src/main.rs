//! `bilinas`: generate synthetic problems, build bilinear accuracy
//! estimators, fit predictors, search under latency targets and report.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "bilinas", version, about = "Bilinear accuracy estimation and latency-constrained architecture search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a search space, a synthetic accuracy oracle and a latency table.
    Gen(GenArgs),
    /// Build the bilinear estimator by probing the oracle.
    Estimate(EstimateArgs),
    /// Fit a closed-form quadratic predictor on sampled architectures.
    Fit(FitArgs),
    /// Search for the most accurate architecture within a latency target.
    Search(SearchArgs),
    /// Rank-correlate an estimator or predictor against the oracle.
    Eval(EvalArgs),
    /// Aggregate the estimator into design insights (optionally ablations).
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// One stage, depths {1,2}, two configs (6 architectures).
    Tiny,
    /// Three stages, depths {1,2,3}, four configs.
    Small,
    /// Five stages, depths {2,3,4}, the 12-config table (255 decisions).
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Bcfw,
    Evo,
    Exact,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Bilinear,
    FullQuadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    /// Config contributions relative to the mean at the pinned depth.
    DepthConditioned,
    /// Config contributions relative to the global mean.
    Global,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Master seed; recorded in every output file.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path: a directory for gen, search and report, a file otherwise.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Common,
    /// Built-in search space; ignored when --space is given.
    #[arg(long, value_enum, default_value_t = Preset::Paper)]
    pub preset: Preset,
    /// Search-space JSON to use instead of a preset.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Expected accuracy of a uniform architecture, percent.
    #[arg(long, default_value_t = 70.0)]
    pub base: f64,
    /// Standard deviation of the depth effects, percent.
    #[arg(long, default_value_t = 0.5)]
    pub depth_scale: f64,
    /// Standard deviation of the config effects, percent.
    #[arg(long, default_value_t = 0.2)]
    pub config_scale: f64,
    /// Strength of pairwise interactions between active decisions.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Standard deviation of per-query observation noise, percent.
    #[arg(long, default_value_t = 0.0)]
    pub noise_std: f64,
    /// Smallest block latency, ms.
    #[arg(long, default_value_t = 1.0)]
    pub lat_min: f64,
    /// Largest block latency, ms.
    #[arg(long, default_value_t = 5.0)]
    pub lat_max: f64,
    /// Latency of the non-searchable part of the network, ms.
    #[arg(long, default_value_t = 10.0)]
    pub overhead: f64,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub oracle: PathBuf,
    /// Oracle queries averaged per probe repeat.
    #[arg(long, default_value_t = 100)]
    pub n_per_probe: usize,
    /// Repeats per probe.
    #[arg(long, default_value_t = 10)]
    pub n_repeats: usize,
    /// Compute every probe by exact enumeration instead of sampling.
    #[arg(long)]
    pub exact: bool,
    /// Enumeration limit for --exact.
    #[arg(long, default_value_t = 1_000_000)]
    pub cap: u128,
    #[arg(long, value_enum, default_value_t = BaselineArg::DepthConditioned)]
    pub baseline: BaselineArg,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub space: PathBuf,
    /// Oracle to sample a fresh dataset from.
    #[arg(long, required_unless_present = "dataset")]
    pub oracle: Option<PathBuf>,
    /// Existing dataset CSV (requires --split).
    #[arg(long, requires = "split", conflicts_with = "oracle")]
    pub dataset: Option<PathBuf>,
    /// Split manifest JSON of --dataset.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Also write the sampled dataset and its split manifest into this directory.
    #[arg(long)]
    pub save_dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Bilinear)]
    pub family: FamilyArg,
    /// Candidate component counts; the best on the validation split is kept.
    #[arg(long, value_delimiter = ',', default_values_t = vec![10, 20, 50, 100, 200])]
    pub k_grid: Vec<usize>,
    /// Training plus validation architectures.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 500)]
    pub n_test: usize,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub estimator: PathBuf,
    #[arg(long)]
    pub latency: PathBuf,
    /// Latency target in ms (40 and 45 are the usual presets).
    #[arg(long, default_value_t = 40.0)]
    pub target: f64,
    #[arg(long, value_enum, default_value_t = SolverArg::All)]
    pub solver: SolverArg,
    /// Frank-Wolfe iterations.
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    /// Probability of updating the config block in a Frank-Wolfe iteration.
    #[arg(long, default_value_t = 0.5)]
    pub p_block: f64,
    /// Round the final Frank-Wolfe iterate directly, without re-solving the
    /// config block at the rounded depths.
    #[arg(long)]
    pub plain_rounding: bool,
    #[arg(long, default_value_t = 100)]
    pub population: usize,
    #[arg(long, default_value_t = 500)]
    pub generations: usize,
    #[arg(long, default_value_t = 0.1)]
    pub mutation_prob: f64,
    #[arg(long, default_value_t = 0.25)]
    pub parent_ratio: f64,
    #[arg(long, default_value_t = 0.5)]
    pub mutation_ratio: f64,
    /// Largest architecture count the exact solver accepts.
    #[arg(long, default_value_t = 1_000_000)]
    pub cap: u128,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub oracle: PathBuf,
    #[arg(long, required_unless_present = "predictor", conflicts_with = "predictor")]
    pub estimator: Option<PathBuf>,
    #[arg(long)]
    pub predictor: Option<PathBuf>,
    /// Test architectures.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Compare against noisy oracle measurements instead of true accuracies.
    #[arg(long)]
    pub noisy_targets: bool,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub estimator: PathBuf,
    #[arg(long)]
    pub latency: PathBuf,
    /// Also rank the estimator with each contribution table zeroed.
    #[arg(long, requires = "oracle")]
    pub ablate: bool,
    /// Oracle for --ablate.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Test architectures for --ablate.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(CliError::EXIT_INVALID as u8) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Search(a) => commands::search(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Report(a) => commands::report(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
