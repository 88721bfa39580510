use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rgc_core::Mode;

#[derive(Debug, Parser)]
#[command(
    name = "rgc",
    version,
    about = "Robust graph construction from noisy data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose X into low-rank D and sparse E while learning the graph S.
    LearnGraph(LearnGraphArgs),
    /// Spectral clustering on a saved or freshly learned graph.
    Cluster(ClusterArgs),
    /// Semi-supervised classification by label propagation on the graph.
    Ssl(SslArgs),
    /// Low-rank recovery of a matrix or an image stack.
    Recover(RecoverArgs),
    /// Accuracy, NMI and purity between two label files.
    Metrics(MetricsArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rgc,
    Rpca,
    FixedGraph,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Rgc => Mode::Rgc,
            ModeArg::Rpca => Mode::Rpca,
            ModeArg::FixedGraph => Mode::FixedGraph,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Data matrix (.csv or .mtx) or a directory of grayscale images.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Matrix files store one sample per row instead of per column.
    #[arg(long)]
    pub samples_as_rows: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Weight of the graph smoothness term. No default.
    #[arg(long)]
    pub beta: Option<f64>,

    /// Neighbors per sample.
    #[arg(long, default_value_t = 10)]
    pub k: usize,

    /// ADMM penalty.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,

    /// Penalty growth factor per iteration (1 keeps mu fixed).
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,

    /// Weight of the sparse term [default: 1/sqrt(max(m, n))].
    #[arg(long)]
    pub alpha: Option<f64>,

    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,

    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,

    #[arg(long, value_enum, default_value_t = ModeArg::Rgc)]
    pub mode: ModeArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LearnGraphArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// For --mode fixed-graph: the graph to keep fixed.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Saved affinity graph; otherwise one is learned from --input.
    #[arg(long, conflicts_with = "input")]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub clusters: usize,
    /// Ground-truth labels (`index,label`) to score against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SslArgs {
    #[arg(long, conflicts_with = "input")]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Known labels (`index,label`); absent rows are unlabeled.
    #[arg(long)]
    pub labels: PathBuf,
    /// Weight of the fit-to-labels term.
    #[arg(long)]
    pub lambda: f64,
    /// Class count [default: largest label + 1].
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// For --mode fixed-graph: the graph to keep fixed.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
