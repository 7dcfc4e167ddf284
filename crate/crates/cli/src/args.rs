use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "sipmix", version, about = "Repulsive Gaussian mixtures with Selberg Dirichlet weights")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Draw the five-component synthetic benchmark.
    Simulate(SimulateArgs),
    /// Run one or more sampler chains on a dataset.
    Fit(FitArgs),
    /// Similarity matrix, cluster-count histogram and Binder partition from traces.
    Analyze(AnalyzeArgs),
    /// Prior distribution of the number of allocated components.
    PriorMa(PriorMaArgs),
    /// Choose the location repulsion by matching k-means centre gaps.
    ElicitZeta(ElicitArgs),
    /// Evaluate densities, constants and moments.
    Dist(DistArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output CSV for the observations.
    #[arg(long, default_value = "benchmark.csv")]
    pub out: PathBuf,
    /// Optional CSV for the true labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

/// Model and sampler settings; every flag overrides the config file.
#[derive(Args, Default)]
pub struct Overrides {
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Scale `c` of the inverse-Wishart matrix `c I`.
    #[arg(long)]
    pub v0_scale: Option<f64>,
    #[arg(long)]
    pub nu0: Option<f64>,
    /// Fixed weight repulsion.
    #[arg(long, conflicts_with_all = ["gamma_shape", "gamma_rate"])]
    pub gamma: Option<f64>,
    #[arg(long, requires = "gamma_rate")]
    pub gamma_shape: Option<f64>,
    #[arg(long, requires = "gamma_shape")]
    pub gamma_rate: Option<f64>,
    /// Fixed location repulsion.
    #[arg(long, conflicts_with_all = ["zeta_shape", "zeta_rate", "rho"])]
    pub zeta: Option<f64>,
    #[arg(long, requires = "zeta_rate", conflicts_with = "rho")]
    pub zeta_shape: Option<f64>,
    #[arg(long, requires = "zeta_shape", conflicts_with = "rho")]
    pub zeta_rate: Option<f64>,
    /// Tie the location repulsion to `rho * gamma`.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub step_mu: Option<f64>,
    #[arg(long)]
    pub step_gamma: Option<f64>,
    /// `centered` or `literal`.
    #[arg(long)]
    pub covariance_update: Option<String>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub adapt: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub record_weights: Option<bool>,
}

#[derive(Args)]
pub struct FitArgs {
    /// Input CSV with a header row.
    #[arg(long, required_unless_present = "from_manifest")]
    pub data: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Flat TOML file with hyperparameter names as keys.
    #[arg(long, conflicts_with = "from_manifest")]
    pub config: Option<PathBuf>,
    /// Repeat the run recorded in a manifest.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// One or more trace files; chains are pooled.
    #[arg(long, required = true, num_args = 1..)]
    pub trace: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PriorMaArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha0: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0, 3.0])]
    pub gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [3, 4, 5, 6, 7, 8])]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV with columns `gamma,m,m_a,prob`; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ElicitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1, 0.5, 1.0])]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Optional JSON report with the per-grid gaps.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
#[group(id = "quantity", required = true, multiple = false)]
pub struct Quantity {
    /// `E{w_M}` under SDir.
    #[arg(long)]
    pub sdir_mean: bool,
    /// `Var{w_M}` under SDir.
    #[arg(long)]
    pub sdir_variance: bool,
    /// `ln D(α, γ, M)`.
    #[arg(long)]
    pub sdir_log_const: bool,
    /// SDir log-density at `--w`.
    #[arg(long)]
    pub sdir_log_density: bool,
    /// `E{θ_τ}` at `--tau`.
    #[arg(long)]
    pub dispersion: bool,
    /// `ln G(M, ζ)`.
    #[arg(long)]
    pub ge_log_const: bool,
    /// GE log-density at `--x`.
    #[arg(long)]
    pub ge_log_density: bool,
}

#[derive(Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub quantity: Quantity,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub w: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
}
