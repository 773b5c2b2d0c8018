//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "aot",
    version,
    about = "Age-of-trust verification scheduling: simulators, policy optimisers, and trust-enhanced slotted-ALOHA analytics",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-link experiments: one run, a trade-off sweep, or Q-table training.
    #[command(subcommand)]
    SingleLink(SingleLinkCommand),
    /// Trust-enhanced frame-slotted ALOHA: analytics, slot optimisation, simulation.
    #[command(subcommand)]
    Aloha(AlohaCommand),
    /// Re-run a named preset experiment and write its data files.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Subcommand)]
pub enum SingleLinkCommand {
    /// Run one policy against one process and write the slot trace.
    Run(SingleLinkRunArgs),
    /// Sweep the age weight and write one trade-off point per value.
    Sweep(SingleLinkSweepArgs),
    /// Train a Q-table and write it as a policy document.
    Qtrain(QtrainArgs),
}

#[derive(Debug, Subcommand)]
pub enum AlohaCommand {
    /// Evaluate the closed-form analytics for one configuration.
    Analyze(AlohaAnalyzeArgs),
    /// Optimise the frame layout (slot count and trust-slot count).
    Optimize(AlohaOptimizeArgs),
    /// Monte Carlo frame simulation with analytic comparison rows.
    Simulate(AlohaSimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Read defaults from a TOML experiment document; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory (precedence: this flag, then $AOT_OUT_DIR, then the
    /// config file, then ./aot-out).
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Data file format.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    /// RNG seed; required unless --entropy-seed asks for a random one.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Draw the seed from system entropy and record it in the manifest.
    #[arg(long, default_value_t = false)]
    pub entropy_seed: bool,
}

#[derive(Debug, Args)]
pub struct SingleLinkRunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Service process, e.g. constant:7, two-point:1,10,0.5,
    /// categorical:2,4,6@0.25,0.5,0.25
    #[arg(long)]
    pub process: Option<String>,
    /// Policy, e.g. periodic:auto, periodic:4, improved:auto, qlearning,
    /// oracle, threshold:3, never, qtable:PATH
    #[arg(long)]
    pub policy: Option<String>,
    /// Age weight in the objective.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Slots to simulate.
    #[arg(long)]
    pub horizon: Option<u64>,
    /// What the policy observes: instantaneous or mean-only.
    #[arg(long)]
    pub observability: Option<String>,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Args)]
pub struct SingleLinkSweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub process: Option<String>,
    /// Policy family re-instantiated per alpha: periodic, improved,
    /// qlearning, or oracle.
    #[arg(long)]
    pub family: Option<String>,
    /// Comma-separated age weights, e.g. 0.25,0.5,1,2,4
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Args)]
pub struct QtrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub process: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub training_slots: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub max_age: Option<u64>,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Args)]
pub struct AlohaConfigArgs {
    /// Number of sensors K.
    #[arg(long)]
    pub sensors: Option<u64>,
    /// Per-frame transmission probability rho.
    #[arg(long)]
    pub activity: Option<f64>,
    /// Slots per frame m.
    #[arg(long)]
    pub slots: Option<u64>,
    /// Trust-enhanced slots per frame m_t.
    #[arg(long)]
    pub trust_slots: Option<u64>,
    /// Trust-enhanced to standard slot duration ratio (> 1).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Standard slot duration (default 1).
    #[arg(long)]
    pub slot_duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AlohaAnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub config: AlohaConfigArgs,
    /// Age weight for the reported objective.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AlohaOptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub sensors: Option<u64>,
    #[arg(long)]
    pub activity: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub slot_duration: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Smallest frame length to scan.
    #[arg(long)]
    pub m_min: Option<u64>,
    /// Largest frame length to scan.
    #[arg(long)]
    pub m_max: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AlohaSimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub config: AlohaConfigArgs,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Frames to simulate.
    #[arg(long)]
    pub frames: Option<u64>,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Preset id: fig2, fig5, fig6, fig7, fig8, fig9, fig10, fig11.
    pub figure: String,
    #[command(flatten)]
    pub common: CommonArgs,
}
