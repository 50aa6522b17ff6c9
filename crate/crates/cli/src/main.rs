//! `kcenter`: generate datasets, run the adaptive k-center solvers, sweep
//! parameter grids, and evaluate instance-hardness bounds.

mod commands;
mod exit;
mod rows;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kcenter::algorithms::{Algorithm, FirstCenter};

#[derive(Parser, Debug)]
#[command(name = "kcenter", version, about = "Adaptive greedy k-center with sampled distances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Run one solver once and print a result row.
    Run(RunArgs),
    /// Run a grid of configurations from a key=value spec file.
    Sweep(SweepArgs),
    /// Evaluate the hardness terms and query bounds of an instance.
    Diag(DiagArgs),
    /// Solve the maximin weight problem for a matrix of means.
    TStar(TStarArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GenKind {
    /// Gaussian blobs (points).
    #[default]
    Blobs,
    /// Coordinates uniform on {-1/2, +1/2} (points).
    Rademacher,
    /// Triplet-similarity style distance matrix.
    Similarity,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Bin,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelArg {
    Ds,
    Ns,
    Bernoulli,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NormArg {
    /// Rescale each dimension onto [-1/2, 1/2].
    #[default]
    Centered,
    /// Rescale each dimension onto [0, 1].
    Unit,
    /// Use coordinates unchanged (must already be normalized).
    AsIs,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t)]
    pub kind: GenKind,
    /// Blob parameters from a key=value file (clusters, per_cluster, m, spread, seed, latent_dim).
    #[arg(long, conflicts_with_all = ["clusters", "per", "spread"])]
    pub spec: Option<PathBuf>,
    /// Use the built-in reference instance (4 x 10 points, m = 200).
    #[arg(long, conflicts_with_all = ["spec", "clusters", "per", "spread"])]
    pub reference: bool,
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    #[arg(long, default_value_t = 10)]
    pub per: usize,
    /// Points (rademacher, similarity).
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, default_value_t = 0.01)]
    pub spread: f64,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

/// Where the ground truth comes from.
#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Points file (CSV or KCPT binary).
    #[arg(long, group = "source")]
    pub data: Option<PathBuf>,
    /// Distance matrix CSV.
    #[arg(long, group = "source")]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub normalize: NormArg,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub algo: Algorithm,
    /// Oracle model; inferred from the algorithm, source and --sigma2 when omitted.
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub z: f64,
    #[arg(long, default_value_t = kcenter::bandit::C_ALPHA)]
    pub c_alpha: f64,
    /// Gaussian noise variance (selects the noisy-distance model).
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Index of the first center, or `random`.
    #[arg(long, default_value = "0")]
    pub first_center: FirstCenter,
    /// Also run exact greedy and report whether the centers match.
    #[arg(long)]
    pub check_greedy: bool,
    /// Per-arm pull cap before exact evaluation (0 = always exact).
    #[arg(long)]
    pub max_pulls: Option<u64>,
    #[arg(long, default_value_t = kcenter::algorithms::STAGE_CAP)]
    pub stage_cap: u64,
    #[arg(long, value_enum, default_value_t)]
    pub precision: Precision,
    /// Result row destination (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-stage query ledger CSV.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Stopping margin after every round, as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// key=value spec file.
    pub spec: PathBuf,
    /// Overrides `out` in the spec.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DiagArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Bound a generated {-1/2, +1/2} dataset of `--n` points in `--m` dimensions.
    #[arg(long, conflicts_with = "source")]
    pub rademacher: bool,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub first_center: usize,
    /// Noise variance for the Track-and-Stop bound.
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Constant of the DS-UCB bound (default: calibrated).
    #[arg(long)]
    pub c: Option<f64>,
    /// Solve the maximin weights for this means file instead.
    #[arg(long, conflicts_with_all = ["source", "rademacher"])]
    pub tstar: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TStarArgs {
    /// CSV of means, one box per row.
    #[arg(long)]
    pub means: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub iterations: usize,
    /// Reward variance; means are divided by its square root.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Run(a) => commands::run(&a),
        Command::Sweep(a) => sweep::sweep(&a),
        Command::Diag(a) => match &a.tstar {
            Some(path) => commands::t_star(&TStarArgs {
                means: path.clone(),
                iterations: 100_000,
                sigma2: 1.0,
                out: a.out.clone(),
            }),
            None => commands::diag(&a),
        },
        Command::TStar(a) => commands::t_star(&a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code(&e))
        }
    }
}
