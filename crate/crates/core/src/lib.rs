//! Macroscopic crowd dynamics with tunable rationality.
//!
//! The crowd is a density `rho(t, x)` transported by `v = v_b* + v_i`, where the
//! behavioral velocity `v_b*` is the optimal feedback of a minimum-time problem
//! and `v_i` is a nonlocal repulsion over each walker's sensory region. How far
//! ahead walkers look when planning (not at all, the frozen present, a window
//! `theta`, or the whole future) selects the behavior. On top of the simulator
//! sits an optimizer that places one rectangular obstacle so that the natural
//! behavior approaches a target behavior.
//!
//! Module map:
//!
//! * [`scenario`]: geometry, scales, cell classification, admissibility.
//! * [`interaction`]: the repulsive interaction velocity.
//! * [`pathplan`]: semi-Lagrangian fast-sweeping HJB solvers and feedbacks.
//! * [`transport`]: conservative upwind transport, inflow and exit accounting.
//! * [`behaviors`]: full simulations per rationality level and their metrics.
//! * [`optimize`]: environmental costs, exhaustive and compass search.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod behaviors;
pub mod error;
pub mod field;
pub mod interaction;
pub mod optimize;
pub mod pathplan;
pub mod scenario;
pub mod transport;

pub use behaviors::{
    simulate, simulate_with, BehaviorKind, BehaviorSpec, Metrics, SimOutcome, StepView,
};
pub use error::{Error, Result};
pub use field::{DensityField, VelocityField};
pub use interaction::InteractionParams;
pub use optimize::{AnnealSpec, CostKind, CostSpec, SearchResult};
pub use pathplan::{ControlSet, HjbConfig, ValueField};
pub use scenario::{
    admissible, classify_cells, initial_density, load_scenario, CellClass, CellGrid,
    CharacteristicScales, ObstacleParam, Rect, Scenario, Side,
};
pub use transport::{ExitLedger, TransportConfig};
