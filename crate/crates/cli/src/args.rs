use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use crowdctl_core::{BehaviorKind, BehaviorSpec, CostKind};

use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "crowdctl",
    version,
    about = "Crowd evacuation simulation and obstacle optimization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one behavior and write its metrics and density snapshots.
    Simulate(SimulateArgs),
    /// Simulate a natural and a target behavior and report every cost.
    Compare(CompareArgs),
    /// Scan obstacle barycenters on the grid with a fixed obstacle shape.
    OptimizeExhaustive(ExhaustiveArgs),
    /// Randomized compass search over obstacle position and sides.
    OptimizeCompass(CompassArgs),
}

#[derive(Debug, Clone, Args)]
pub struct IoArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    pub scenario: PathBuf,
    /// Output directory, created when missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BehaviorArgs {
    /// Behavior to simulate (the natural behavior for comparisons and searches).
    #[arg(long, default_value = "basic", value_parser = parse_behavior)]
    pub behavior: BehaviorKind,
    /// Look-ahead window of the theta-rational behavior, s.
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    /// Transport steps between two plans (rational and theta-rational).
    #[arg(long, value_name = "N")]
    pub replan_every: Option<usize>,
    /// Time-space horizon, s.
    #[arg(long, value_name = "SECONDS")]
    pub t_max: Option<f64>,
    /// Fixed-point iteration cap of the highly rational behavior.
    #[arg(long, value_name = "N")]
    pub fp_max_iter: Option<usize>,
}

impl BehaviorArgs {
    /// Default spec of `kind` with the command-line overrides applied.
    pub fn spec(&self, kind: BehaviorKind) -> CliResult<BehaviorSpec> {
        let mut spec = BehaviorSpec::of_kind(kind);
        spec.theta = self.theta;
        if let Some(n) = self.replan_every {
            spec.replan_every = n;
        }
        spec.t_max = self.t_max;
        if let Some(n) = self.fp_max_iter {
            spec.fp_max_iter = n;
        }
        spec.validate().map_err(CliError::Core)?;
        Ok(spec)
    }
}

fn parse_behavior(s: &str) -> Result<BehaviorKind, String> {
    s.parse().map_err(|e: crowdctl_core::Error| e.to_string())
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".to_string()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_cost(s: &str) -> Result<CostKind, String> {
    s.parse().map_err(|e: crowdctl_core::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub behavior: BehaviorArgs,
    /// Write a density snapshot every N steps.
    #[arg(long, value_name = "N", value_parser = parse_positive)]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub behavior: BehaviorArgs,
    /// Target behavior.
    #[arg(long, default_value = "rational", value_parser = parse_behavior)]
    pub target: BehaviorKind,
}

#[derive(Debug, Clone, Args)]
pub struct ExhaustiveArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub behavior: BehaviorArgs,
    /// Target behavior.
    #[arg(long, default_value = "rational", value_parser = parse_behavior)]
    pub target: BehaviorKind,
    /// Environmental cost to minimize.
    #[arg(long, default_value = "d1", value_parser = parse_cost)]
    pub cost: CostKind,
    /// Obstacle side along x, m.
    #[arg(long)]
    pub obstacle_w: f64,
    /// Obstacle side along y, m.
    #[arg(long)]
    pub obstacle_h: f64,
    /// Keep every N-th grid node along each axis.
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    pub stride: usize,
    /// Parallel simulations; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CompassArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub behavior: BehaviorArgs,
    /// Target behavior.
    #[arg(long, default_value = "rational", value_parser = parse_behavior)]
    pub target: BehaviorKind,
    /// Environmental cost to minimize.
    #[arg(long, default_value = "d1", value_parser = parse_cost)]
    pub cost: CostKind,
    /// Initial obstacle as "x,y,w,h": barycenter and sides, m.
    #[arg(long, value_name = "X,Y,W,H", allow_hyphen_values = true)]
    pub lambda0: String,
    /// Seed of the random walk.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Evaluations before the walk stops.
    #[arg(long, default_value_t = 500)]
    pub max_steps: usize,
    /// Consecutive rejections that end the walk.
    #[arg(long, default_value_t = 200)]
    pub stall_limit: usize,
    /// Accept only improving moves.
    #[arg(long)]
    pub no_anneal: bool,
    /// Initial annealing temperature; a tenth of the starting cost by default.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Temperature factor applied after every step.
    #[arg(long, default_value_t = 0.95)]
    pub cooling: f64,
}
