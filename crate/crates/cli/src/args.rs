use std::path::PathBuf;

use aqem_core::StateKind;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "aqem",
    version,
    about = "Adaptive interferometric phase estimation"
)]
pub struct Cli {
    /// TOML file with default values for any option; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for training and scaling runs (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a feedback policy with differential evolution.
    Train(TrainArgs),
    /// Score a stored policy at one phase or over random phases.
    Evaluate(EvaluateArgs),
    /// Fisher information and Cramér-Rao bound of a stored policy.
    Fisher(FisherArgs),
    /// Train over a range of N and fit a power law to the held-out V_H.
    Scaling(ScalingArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct DeArgs {
    /// DE population size.
    #[arg(long)]
    pub pop: Option<usize>,
    /// DE differential weight F.
    #[arg(long)]
    pub weight: Option<f64>,
    /// DE crossover probability.
    #[arg(long)]
    pub cr: Option<f64>,
    /// Number of DE generations.
    #[arg(long)]
    pub gens: Option<usize>,
    /// Number of generations as a multiple of N (ignored when --gens is given).
    #[arg(long)]
    pub gens_per_photon: Option<usize>,
    /// Simulated shots per training phase.
    #[arg(long)]
    pub shots: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Number of photons.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub state: Option<StateKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub de: DeArgs,
    /// Policy output path; the report goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["phi", "random"])))]
pub struct EvaluateArgs {
    #[arg(long)]
    pub policy: PathBuf,
    /// Input state; defaults to the state recorded in the policy file.
    #[arg(long)]
    pub state: Option<StateKind>,
    /// Evaluate at this phase (radians).
    #[arg(long, allow_negative_numbers = true)]
    pub phi: Option<f64>,
    /// Evaluate over this many uniformly random phases, one shot each.
    #[arg(long)]
    pub random: Option<usize>,
    /// Shots for a fixed phase when exact enumeration is too large.
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FisherArgs {
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub state: Option<StateKind>,
    #[arg(long, allow_negative_numbers = true)]
    pub phi: f64,
    /// Central-difference step, in [1e-6, 1e-3].
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub state: Option<StateKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub de: DeArgs,
    /// Output directory for the CSV/JSON summary and the trained policies.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
