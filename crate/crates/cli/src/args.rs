use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use colband::policies::{Algo, DEFAULT_ALPHA1, DEFAULT_ALPHA2, DEFAULT_LATENT_INIT_SCALE};
use colband::replay::{BucketBy, DEFAULT_BUCKET, DEFAULT_WINDOW};
use colband::synth::RewardModel;

/// Collaborative contextual bandits: clustering, similarity graphs, replay
/// evaluation and synthetic simulation.
///
/// Every subcommand also accepts `--config FILE`, a `key=value` file whose keys
/// are long flag names. Flags given on the command line win over the file.
#[derive(Debug, Parser)]
#[command(name = "colband", version, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a uniformly logged synthetic event log.
    Genlog(GenlogArgs),
    /// k-means on the user features of an event log; writes a centroid CSV.
    Cluster(ClusterArgs),
    /// Build a sparsified similarity matrix from a centroid CSV.
    Buildw(BuildwArgs),
    /// Check a W file against every similarity-matrix invariant.
    ValidateW(ValidateWArgs),
    /// Replay a policy over an event log; writes the metrics CSV.
    Replay(ReplayArgs),
    /// Run a policy live against a synthetic environment; writes the regret CSV.
    Simulate(SimulateArgs),
    /// Normalize metrics CSVs by a random-policy run.
    Report(ReportArgs),
    /// Cluster, build W, replay and report over a grid of settings.
    Grid(GridArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Random,
    Linucb,
    Mlinucb,
    Colin,
    Factorucb,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Random => Algo::Random,
            AlgoArg::Linucb => Algo::LinUcb,
            AlgoArg::Mlinucb => Algo::MLinUcb,
            AlgoArg::Colin => Algo::CoLin,
            AlgoArg::Factorucb => Algo::FactorUcb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BucketArg {
    Matched,
    Raw,
}

impl From<BucketArg> for BucketBy {
    fn from(b: BucketArg) -> Self {
        match b {
            BucketArg::Matched => BucketBy::Matched,
            BucketArg::Raw => BucketBy::Raw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RewardArg {
    Bernoulli,
    Gaussian,
}

impl From<RewardArg> for RewardModel {
    fn from(r: RewardArg) -> Self {
        match r {
            RewardArg::Bernoulli => RewardModel::Bernoulli,
            RewardArg::Gaussian => RewardModel::Gaussian,
        }
    }
}

/// Shape of a synthetic environment. The environment and its true W are drawn
/// from `--seed`.
#[derive(Debug, Clone, Args)]
pub struct EnvArgs {
    #[arg(long, default_value_t = 10)]
    pub clusters: usize,
    /// Arm feature dimension.
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    /// Dimension of the hidden per-arm latent vectors.
    #[arg(long, default_value_t = 0)]
    pub env_latent_dim: usize,
    /// Candidates per event.
    #[arg(long, default_value_t = 10)]
    pub pool: usize,
    /// Size of the arm catalog.
    #[arg(long, default_value_t = 50)]
    pub arms: usize,
    #[arg(long, default_value_t = 5)]
    pub user_dim: usize,
    /// Diagonal weight of the true W; the rest of each column is spread randomly.
    #[arg(long, default_value_t = 0.4)]
    pub self_weight: f64,
    #[arg(long, default_value_t = 0.5)]
    pub latent_scale: f64,
    #[arg(long, value_enum, default_value_t = RewardArg::Bernoulli)]
    pub reward: RewardArg,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct GenlogArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the true centroids here.
    #[arg(long)]
    pub truth_centroids: Option<PathBuf>,
    /// Also write the true W here.
    #[arg(long)]
    pub truth_w: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct ClusterArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = colband::clustering::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    /// z-score user features before clustering. The scaling is written next to
    /// the centroids as `<out>.scaling` and picked up by `replay`.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct BuildwArgs {
    #[arg(long)]
    pub centroids: PathBuf,
    /// Percentage of weights kept per column.
    #[arg(long, default_value_t = 100.0)]
    pub sparsity: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct ValidateWArgs {
    #[arg(long)]
    pub w: PathBuf,
}

/// Policy hyperparameters shared by `replay` and `simulate`.
#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    #[arg(long, value_enum)]
    pub algo: Option<AlgoArg>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA1)]
    pub alpha1: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA2)]
    pub alpha2: f64,
    /// FactorUCB latent dimension.
    #[arg(long, default_value_t = 0)]
    pub latent_dim: usize,
    /// Half-width of the uniform draw for new arms' latent vectors.
    #[arg(long, default_value_t = DEFAULT_LATENT_INIT_SCALE)]
    pub latent_init: f64,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct ReplayArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Centroid CSV from `cluster`. Without it every user is in one cluster.
    #[arg(long)]
    pub centroids: Option<PathBuf>,
    /// W file from `buildw`; required by colin and factorucb.
    #[arg(long)]
    pub w: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BUCKET)]
    pub bucket: usize,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, value_enum, default_value_t = BucketArg::Matched)]
    pub bucket_by: BucketArg,
    /// Omit the first `window - 1` buckets, whose rolling average is partial.
    #[arg(long)]
    pub drop_warmup: bool,
    /// Start from a saved policy instead of a fresh one.
    #[arg(long)]
    pub snapshot_in: Option<PathBuf>,
    /// Save the final policy state here.
    #[arg(long)]
    pub snapshot_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub progress_every: u64,
    /// Extra `key=value` written to the run sidecar, e.g. `--tag sparsity=25`.
    #[arg(long = "tag", value_parser = parse_tag)]
    pub tags: Vec<(String, String)>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_tag(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Play the true best arm every step instead of `--algo`.
    #[arg(long)]
    pub oracle: bool,
    /// W given to colin and factorucb; defaults to the environment's true W.
    #[arg(long)]
    pub w: Option<PathBuf>,
    #[arg(long)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct ReportArgs {
    /// Metrics CSVs to normalize.
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    /// Metrics CSV of the random policy on the same log.
    #[arg(long)]
    pub random: PathBuf,
    /// Per-bucket ratio table.
    #[arg(long)]
    pub out: PathBuf,
    /// Summary table; printed to stdout when omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct GridArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [80, 160])]
    pub clusters: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [25.0, 50.0, 100.0])]
    pub sparsity: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0])]
    pub alpha: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [AlgoArg::Mlinucb, AlgoArg::Colin, AlgoArg::Factorucb])]
    pub algos: Vec<AlgoArg>,
    #[arg(long, default_value_t = DEFAULT_ALPHA1)]
    pub alpha1: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA2)]
    pub alpha2: f64,
    #[arg(long, default_value_t = 3)]
    pub latent_dim: usize,
    #[arg(long, default_value_t = DEFAULT_LATENT_INIT_SCALE)]
    pub latent_init: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BUCKET)]
    pub bucket: usize,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long)]
    pub standardize: bool,
    /// Parallel jobs; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}
