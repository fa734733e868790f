use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use exactapprox::numeric::rational::{parse_rational, parse_rational_list};
use exactapprox::Rational;

#[derive(Debug, Parser)]
#[command(name = "exactapprox", version, about = "Exact weighted Diophantine approximation toolkit")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dimension of the exactly approximable set, with the auxiliary-weight
    /// bound and the profile minimum when `--delta` is given.
    Dim(DimArgs),
    /// Auxiliary weights for `(w, τ, δ)`.
    Aux(AuxArgs),
    /// Build a parameter schedule and check every inequality it must satisfy.
    Schedule(ScheduleArgs),
    /// Build a finite-depth Cantor tree.
    Build(BuildArgs),
    /// Run the structural, pointwise and counting checks on a saved tree.
    Verify(VerifyArgs),
    /// Local-dimension bounds and box counting on a saved tree.
    Analyze(AnalyzeArgs),
    /// Scan `q <= Q` for `‖q x − p‖_w < c q^{−τ}`.
    Approx(ApproxArgs),
}

#[derive(Debug, Clone)]
pub struct QList(pub Vec<Rational>);

#[derive(Debug, Clone)]
pub struct IntList(pub Vec<u64>);

/// Semicolon-separated integer lists, e.g. `3,3;14,14`.
#[derive(Debug, Clone)]
pub struct IntTable(pub Vec<Vec<u64>>);

fn q_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn q_list(s: &str) -> Result<QList, String> {
    parse_rational_list(s).map(QList).map_err(|e| e.to_string())
}

fn int_list(s: &str) -> Result<IntList, String> {
    s.split(',').map(|x| x.trim().parse::<u64>().map_err(|e| format!("{x:?}: {e}"))).collect::<Result<_, _>>().map(IntList)
}

fn int_table(s: &str) -> Result<IntTable, String> {
    s.split(';').map(|row| int_list(row).map(|r| r.0)).collect::<Result<_, _>>().map(IntTable)
}

#[derive(Debug, Args)]
pub struct WeightArgs {
    /// Dimension; with no `-w` the weights are equal.
    #[arg(short = 'd', long)]
    pub d: Option<usize>,
    /// Ascending weights summing to 1, e.g. `1/3,2/3`.
    #[arg(short = 'w', long, value_parser = q_list)]
    pub w: Option<QList>,
    #[arg(long, value_parser = q_arg)]
    pub tau: Rational,
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, value_parser = q_arg)]
    pub delta: Option<Rational>,
}

#[derive(Debug, Args)]
pub struct AuxArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, value_parser = q_arg)]
    pub delta: Rational,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, value_parser = q_arg)]
    pub delta: Rational,
    /// Number of epochs.
    #[arg(short = 'k', long = "k-max", default_value_t = 1)]
    pub k_max: usize,
    /// Every constant from its formula.
    #[arg(long, conflicts_with = "toy")]
    pub faithful: bool,
    /// Formulas with the overrides below; needs `--r`.
    #[arg(long)]
    pub toy: bool,
    #[arg(long, value_parser = q_arg)]
    pub r: Option<Rational>,
    #[arg(long, value_parser = q_arg)]
    pub eps0: Option<Rational>,
    #[arg(long, value_parser = q_list)]
    pub rho0: Option<QList>,
    #[arg(long)]
    pub xi: Option<u64>,
    /// Epoch starts `n_1,n_2,…`.
    #[arg(long, value_parser = int_list)]
    pub n: Option<IntList>,
    /// Per-epoch axis levels, epochs separated by `;`.
    #[arg(long, value_parser = int_table)]
    pub ni: Option<IntTable>,
    #[arg(long, value_parser = q_list)]
    pub eps: Option<QList>,
    #[arg(long, value_parser = q_list)]
    pub c: Option<QList>,
    #[arg(long = "eps-l7", value_parser = q_arg)]
    pub eps_l7: Option<Rational>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub depth: u64,
    /// Where to save the tree.
    #[arg(long)]
    pub tree: PathBuf,
    /// Per-level summary CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long = "max-boxes", default_value_t = 1 << 20)]
    pub max_boxes: usize,
    #[arg(long = "enum-budget", default_value_t = exactapprox::numeric::DEFAULT_BUDGET)]
    pub enum_budget: u64,
    /// Keep every live child instead of trimming to a uniform branching.
    #[arg(long = "no-uniform")]
    pub no_uniform: bool,
    /// Re-admit one box the danger count removed.
    #[arg(long = "inject-fault")]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub tree: PathBuf,
    /// Random points per box for the pointwise checks.
    #[arg(long, default_value_t = 2)]
    pub samples: usize,
    #[arg(long = "trial-boxes", default_value_t = 100)]
    pub trial_boxes: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long = "trial-boxes", default_value_t = 100)]
    pub trial_boxes: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Points sampled from the measure for box counting.
    #[arg(long, default_value_t = 2000)]
    pub points: usize,
    /// Box-counting scales; defaults to the first-axis side of every level.
    #[arg(long, value_parser = q_list)]
    pub scales: Option<QList>,
    /// Local-dimension CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    /// The point, e.g. `1/3,2/3`.
    #[arg(short = 'x', long, value_parser = q_list)]
    pub x: QList,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, value_parser = q_arg)]
    pub c: Rational,
    #[arg(long = "q-max")]
    pub q_max: u64,
}
