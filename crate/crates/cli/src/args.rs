use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "pgpca", version, about = "Probabilistic geometric PCA")]
pub struct Cli {
    /// Worker threads for the data-parallel loops (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// JSON file with default values for numeric knobs; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw samples from a named true model.
    Simulate(SimulateArgs),
    /// Fit a closed spline through k-means knots ordered by a shortest tour.
    FitManifold(FitManifoldArgs),
    /// Fit a PGPCA model by EM.
    Fit(FitArgs),
    /// Fit a PPCA baseline.
    Ppca(PpcaArgs),
    /// Log-likelihood of a saved model on data.
    Loglik(LoglikArgs),
    /// Compare Euclidean and geometric coordinates across model dimensions.
    Compare(CompareArgs),
    /// Rerun a published experiment.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of samples (defaults to the spec's training size).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the latent states.
    #[arg(long)]
    pub latents: Option<PathBuf>,
    /// Write a header line with column names.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct FitManifoldArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub knots: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `ellipse`, `torus` or a manifold JSON file.
    #[arg(long)]
    pub manifold: Option<String>,
    /// `gecov` or `eucov`.
    #[arg(long)]
    pub coords: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub landmarks: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Keep the landmark weights uniform instead of learning them.
    #[arg(long)]
    pub fixed_weights: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the EM diagnostics.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PpcaArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LoglikArgs {
    /// PGPCA or PPCA model JSON.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Write the per-sample log-likelihoods as a one-column CSV.
    #[arg(long)]
    pub per_sample: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Named true model to simulate from.
    #[arg(long, conflicts_with = "data")]
    pub spec: Option<String>,
    /// Data file, evaluated by cross-validation.
    #[arg(long, requires = "manifold")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub manifold: Option<String>,
    /// Model dimensions: `a..b` (inclusive), `a..=b`, `a..<b`, or a comma list.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub trial_len: Option<usize>,
    #[arg(long)]
    pub landmarks: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fix the landmark weights at the true latent law (simulated data only).
    #[arg(long)]
    pub given_weights: bool,
    /// Shuffle samples before splitting into folds.
    #[arg(long)]
    pub shuffle: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Experiment name; only `table2-sim` is available.
    pub experiment: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub trial_len: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
