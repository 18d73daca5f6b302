//! Environmental costs and the search for the controlled obstacle.
//!
//! A cost compares the metrics of the natural behavior in the controlled
//! domain with those of a target behavior. The obstacle is searched either by
//! enumerating barycenters on the grid with a fixed shape, or by a randomized
//! compass walk over position and sides with optional simulated annealing.

mod compass;
mod exhaustive;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::behaviors::{simulate, BehaviorSpec, Metrics};
use crate::error::{Error, Result};
use crate::scenario::{admissible, ObstacleParam, Scenario};

pub use compass::{compass_search, compass_search_with, AnnealSpec, CompassOptions};
pub use exhaustive::{
    barycenter_nodes, exhaustive_search, exhaustive_search_with, ExhaustiveOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    /// Gap between evacuation times.
    Delta1,
    /// Euclidean distance between per-exit pedestrian counts.
    Delta2,
    /// Gap between peak densities.
    Delta3,
}

impl CostKind {
    pub const ALL: [CostKind; 3] = [CostKind::Delta1, CostKind::Delta2, CostKind::Delta3];

    pub fn name(self) -> &'static str {
        match self {
            CostKind::Delta1 => "d1",
            CostKind::Delta2 => "d2",
            CostKind::Delta3 => "d3",
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d1" | "delta1" => Ok(CostKind::Delta1),
            "d2" | "delta2" => Ok(CostKind::Delta2),
            "d3" | "delta3" => Ok(CostKind::Delta3),
            other => Err(Error::invalid("cost", format!("unknown cost `{other}`"))),
        }
    }
}

/// A cost kind together with the metrics of the target behavior.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub kind: CostKind,
    pub target: Metrics,
}

impl CostSpec {
    pub fn new(kind: CostKind, target: Metrics) -> Self {
        Self { kind, target }
    }
}

/// Distance between `controlled` and the target metrics. An aborted run
/// already carries the abort time as its evacuation time.
pub fn evaluate_cost(spec: &CostSpec, controlled: &Metrics) -> f64 {
    let t = &spec.target;
    match spec.kind {
        CostKind::Delta1 => (controlled.t_evac - t.t_evac).abs(),
        CostKind::Delta2 => {
            let n = controlled.exit_counts.len().max(t.exit_counts.len());
            let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
            (0..n)
                .map(|k| at(&controlled.exit_counts, k) - at(&t.exit_counts, k))
                .map(|d| d * d)
                .sum::<f64>()
                .sqrt()
        }
        CostKind::Delta3 => (controlled.rho_max - t.rho_max).abs(),
    }
}

/// Source of natural-behavior metrics for candidate obstacles.
pub trait Evaluator: Sync {
    fn admissible(&self, lambda: &ObstacleParam) -> bool;

    /// Metrics of the natural behavior with `lambda` added, or in the
    /// uncontrolled domain for `None`.
    fn metrics(&self, lambda: Option<&ObstacleParam>) -> Result<Metrics>;
}

/// Evaluates candidates by simulating the natural behavior on a scenario.
#[derive(Debug, Clone)]
pub struct SimEvaluator<'a> {
    pub scenario: &'a Scenario,
    pub natural: &'a BehaviorSpec,
}

impl<'a> SimEvaluator<'a> {
    pub fn new(scenario: &'a Scenario, natural: &'a BehaviorSpec) -> Self {
        Self { scenario, natural }
    }
}

impl Evaluator for SimEvaluator<'_> {
    fn admissible(&self, lambda: &ObstacleParam) -> bool {
        admissible(lambda, self.scenario)
    }

    fn metrics(&self, lambda: Option<&ObstacleParam>) -> Result<Metrics> {
        Ok(simulate(self.scenario, self.natural, lambda)?.metrics)
    }
}

/// The eight elementary obstacle moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Move `p` cells towards `+x`.
    East = 1,
    West = 2,
    North = 3,
    South = 4,
    /// Stretch the `x` side by `2p` cells around the barycenter.
    Widen = 5,
    Narrow = 6,
    /// Stretch the `y` side by `2p` cells around the barycenter.
    Heighten = 7,
    Flatten = 8,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::East,
        Rule::West,
        Rule::North,
        Rule::South,
        Rule::Widen,
        Rule::Narrow,
        Rule::Heighten,
        Rule::Flatten,
    ];

    /// Rule number, 1 to 8.
    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Rule> {
        Rule::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }
}

/// Largest move amplitude, in cells.
pub const MAX_STEP_CELLS: u8 = 5;

/// Applies `rule` with amplitude `p` cells on a grid of spacing `h`. Sides
/// never shrink below one cell.
pub fn perturb(lambda: &ObstacleParam, rule: Rule, p: u8, h: f64) -> ObstacleParam {
    let d = f64::from(p) * h;
    let mut l = *lambda;
    match rule {
        Rule::East => l.x += d,
        Rule::West => l.x -= d,
        Rule::North => l.y += d,
        Rule::South => l.y -= d,
        Rule::Widen => l.w += 2.0 * d,
        Rule::Narrow => l.w = (l.w - 2.0 * d).max(h),
        Rule::Heighten => l.h += 2.0 * d,
        Rule::Flatten => l.h = (l.h - 2.0 * d).max(h),
    }
    l
}

/// One candidate seen by a search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub step: usize,
    /// Move that produced the candidate (compass only).
    pub rule: Option<Rule>,
    pub p: Option<u8>,
    pub lambda: ObstacleParam,
    /// Cost, `None` when the candidate is not admissible.
    pub delta: Option<f64>,
    /// The natural run did not evacuate before its abort time.
    pub aborted: bool,
    pub accepted: bool,
}

/// Cost at one barycenter of an exhaustive scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaCell {
    pub x: f64,
    pub y: f64,
    /// Cost, or the uncontrolled cost when the position is not admissible.
    pub delta: f64,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub lambda_star: ObstacleParam,
    pub delta_star: f64,
    /// Cost of the natural behavior without the controlled obstacle.
    pub uncontrolled_delta: f64,
    pub evaluations: Vec<Evaluation>,
    pub delta_map: Option<Vec<DeltaCell>>,
}
