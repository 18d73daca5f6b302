//! Full simulations per rationality level and their evacuation metrics.
//!
//! Every run works on the dimensionless form of the scenario. Inputs expressed
//! in the scenario's own units (`theta`, `t_max`, the controlled obstacle) are
//! converted on entry, and [`Metrics`] are reported in physical units: seconds,
//! ped/m^2 and pedestrians.

mod engine;
mod metrics;
mod rationality;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::pathplan::HjbConfig;
use crate::scenario::{admissible, CharacteristicScales, ObstacleParam, Scenario};
use crate::transport::TransportConfig;

pub use metrics::{compute_metrics, History, Metrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BehaviorKind {
    /// Plans once on the empty domain.
    Basic,
    /// Replans against the frozen current crowd.
    Rational,
    /// Replans against the crowd predicted over a window `theta`.
    Theta,
    /// Plans against the whole future evolution of the crowd.
    HighlyRational,
}

impl BehaviorKind {
    pub fn name(self) -> &'static str {
        match self {
            BehaviorKind::Basic => "basic",
            BehaviorKind::Rational => "rational",
            BehaviorKind::Theta => "theta",
            BehaviorKind::HighlyRational => "highly-rational",
        }
    }
}

impl fmt::Display for BehaviorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BehaviorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(BehaviorKind::Basic),
            "rational" => Ok(BehaviorKind::Rational),
            "theta" => Ok(BehaviorKind::Theta),
            "hr" | "highly-rational" | "highly_rational" => Ok(BehaviorKind::HighlyRational),
            other => Err(Error::invalid(
                "behavior",
                format!("unknown behavior `{other}`"),
            )),
        }
    }
}

/// Which behavior to simulate and the numerical controls of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorSpec {
    pub kind: BehaviorKind,
    /// Look-ahead window, in the scenario's time units (`Theta` only).
    pub theta: f64,
    /// Transport steps between two plans (`Rational` and `Theta`).
    pub replan_every: usize,
    pub fp_max_iter: usize,
    /// Fixed-point tolerance on the mass-normalized L1 residual.
    pub fp_tol: f64,
    /// Relaxation weight of each new forward trajectory.
    pub fp_damping: f64,
    /// Time-space horizon in the scenario's time units; derived from the
    /// eikonal value when `None`.
    pub t_max: Option<f64>,
    /// Evacuation threshold as a fraction of the mass introduced.
    pub eps_evac: f64,
    /// Share of the introduced mass an exit must take to count as used.
    pub used_exit_frac: f64,
    pub hjb: HjbConfig,
    pub transport: TransportConfig,
}

impl BehaviorSpec {
    fn with_kind(kind: BehaviorKind) -> Self {
        Self {
            kind,
            theta: 0.0,
            replan_every: 1,
            fp_max_iter: 50,
            fp_tol: 1e-3,
            fp_damping: 0.5,
            t_max: None,
            eps_evac: 0.01,
            used_exit_frac: 0.01,
            hjb: HjbConfig::default(),
            transport: TransportConfig::default(),
        }
    }

    pub fn basic() -> Self {
        Self::with_kind(BehaviorKind::Basic)
    }

    pub fn rational() -> Self {
        Self::with_kind(BehaviorKind::Rational)
    }

    pub fn theta(theta: f64) -> Self {
        Self {
            theta,
            replan_every: 5,
            ..Self::with_kind(BehaviorKind::Theta)
        }
    }

    pub fn highly_rational() -> Self {
        Self::with_kind(BehaviorKind::HighlyRational)
    }

    /// Default spec of a kind.
    pub fn of_kind(kind: BehaviorKind) -> Self {
        match kind {
            BehaviorKind::Basic => Self::basic(),
            BehaviorKind::Rational => Self::rational(),
            BehaviorKind::Theta => Self::theta(0.0),
            BehaviorKind::HighlyRational => Self::highly_rational(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 0.0) {
            return Err(Error::invalid("theta", "must be nonnegative"));
        }
        if self.replan_every == 0 {
            return Err(Error::invalid("replan_every", "must be at least 1"));
        }
        if !(self.fp_damping > 0.0 && self.fp_damping <= 1.0) {
            return Err(Error::invalid("fp_damping", "must lie in (0, 1]"));
        }
        if !(self.fp_tol > 0.0) || self.fp_max_iter == 0 {
            return Err(Error::invalid("fp_tol/fp_max_iter", "must be positive"));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0) {
                return Err(Error::invalid("t_max", "must be strictly positive"));
            }
        }
        if !(self.eps_evac > 0.0 && self.eps_evac < 1.0) {
            return Err(Error::invalid("eps_evac", "must lie in (0, 1)"));
        }
        if !(self.used_exit_frac >= 0.0 && self.used_exit_frac < 1.0) {
            return Err(Error::invalid("used_exit_frac", "must lie in [0, 1)"));
        }
        let c = self.transport.cfl;
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::invalid("cfl", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Convergence record of a coupled fixed-point solve.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FixedPointReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

/// Result of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub metrics: Metrics,
    /// Fixed-point record (highly rational only).
    pub fixed_point: Option<FixedPointReport>,
    /// Some time-space solve was dominated by its terminal condition.
    pub horizon_warning: bool,
    /// Walkable cells that cannot reach an exit on the empty domain.
    pub unreachable_cells: usize,
    /// Horizon used by time-space solves, in seconds.
    pub t_max: f64,
}

/// A simulation state handed to the snapshot observer after every step.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub step: usize,
    /// Elapsed time, s.
    pub time: f64,
    /// Dimensionless density.
    pub density: &'a DensityField,
    pub scales: CharacteristicScales,
}

impl StepView<'_> {
    /// The density in ped/m^2 on a grid with spacing in meters.
    pub fn physical_density(&self) -> DensityField {
        let d = self.density;
        DensityField::from_vec(
            d.nx(),
            d.ny(),
            d.spacing() * self.scales.length,
            d.as_slice()
                .iter()
                .map(|r| r * self.scales.density)
                .collect(),
        )
    }
}

/// Runs `spec` on `s`, optionally with the controlled obstacle `lambda`.
pub fn simulate(
    s: &Scenario,
    spec: &BehaviorSpec,
    lambda: Option<&ObstacleParam>,
) -> Result<SimOutcome> {
    simulate_with(s, spec, lambda, &mut |_| {})
}

/// [`simulate`] with an observer called on the initial state and after each
/// transport step of the reported trajectory.
pub fn simulate_with(
    s: &Scenario,
    spec: &BehaviorSpec,
    lambda: Option<&ObstacleParam>,
    on_step: &mut dyn FnMut(&StepView<'_>),
) -> Result<SimOutcome> {
    s.validate()?;
    spec.validate()?;
    if let Some(l) = lambda {
        if !admissible(l, s) {
            return Err(Error::Inadmissible);
        }
    }
    let engine = engine::Engine::new(s, spec, lambda)?;
    match spec.kind {
        BehaviorKind::Basic => rationality::run_basic(&engine, on_step),
        BehaviorKind::Rational => rationality::run_rational(&engine, on_step),
        BehaviorKind::Theta => rationality::run_theta_rational(&engine, on_step),
        BehaviorKind::HighlyRational => rationality::run_highly_rational(&engine, on_step),
    }
}

#[cfg(test)]
mod tests;
