//! Shared machinery of every behavior: the dimensionless setup, the
//! simulation state and the transport step driven by a behavioral field.

use super::metrics::{compute_metrics, History, Sample};
use super::{BehaviorSpec, FixedPointReport, SimOutcome, StepView};
use crate::error::{Error, Result};
use crate::field::{DensityField, VelocityField};
use crate::interaction::{interaction_velocity_with, InteractionParams, Stencil};
use crate::pathplan::{
    feedback_controls, solve_drift_hjb, solve_eikonal, HjbConfig, TimeSpaceSolution,
};
use crate::scenario::{
    classify_cells, initial_density, CellClass, CellGrid, ObstacleParam, Scenario,
};
use crate::transport::{cfl_dt, inject_inflow, project_velocity, step_density, ExitLedger};

/// Read-only context of one simulation, in dimensionless units.
pub(crate) struct Engine<'a> {
    pub spec: &'a BehaviorSpec,
    pub s: Scenario,
    pub g: CellGrid,
    pub params: InteractionParams,
    pub stencil: Stencil,
    pub basic_codes: Vec<u8>,
    pub t_max: f64,
    pub t_abort: f64,
    pub theta: f64,
    pub inflow_end: f64,
    /// Initial mass plus the full planned inflow.
    pub m_ref: f64,
    pub unreachable: usize,
}

impl<'a> Engine<'a> {
    pub fn new(
        s: &Scenario,
        spec: &'a BehaviorSpec,
        lambda: Option<&ObstacleParam>,
    ) -> Result<Self> {
        let to_len = s.length_to_dimensionless();
        let time_scale = match s.units {
            crate::scenario::Units::Physical => s.scales.time(),
            crate::scenario::Units::Dimensionless => 1.0,
        };
        let d = s.nondimensionalize();
        let lambda = lambda.map(|l| l.scaled(to_len));
        let g = classify_cells(&d, lambda.as_ref());
        let hjb = &spec.hjb;
        let eikonal = solve_eikonal(&g, hjb);
        let mut movable = 0;
        let mut reachable = 0;
        for idx in 0..g.len() {
            let c = g.class_at(idx);
            if c.is_walkable() && !matches!(c, CellClass::Exit(_)) {
                movable += 1;
                if eikonal.as_slice()[idx].is_finite() {
                    reachable += 1;
                }
            }
        }
        if (0..g.n_exits()).all(|k| g.exit_cell_count(k) == 0) || (movable > 0 && reachable == 0) {
            return Err(Error::NoReachableCell);
        }
        let basic_codes = feedback_controls(&eikonal, &g, None, hjb);
        let t_max = match spec.t_max {
            Some(t) => t / time_scale,
            None => 3.0 * eikonal.max_finite().max(g.spacing()),
        };
        let h = g.spacing();
        let params = InteractionParams::from_scenario(&d);
        let stencil = Stencil::new(&params, h);
        let mut engine = Engine {
            spec,
            theta: spec.theta / time_scale,
            inflow_end: d.inflow_end(),
            m_ref: 0.0,
            unreachable: movable - reachable,
            t_abort: 5.0 * t_max,
            t_max,
            s: d,
            g,
            params,
            stencil,
            basic_codes,
        };
        let rho0 = engine.initial_density();
        let inflow: f64 = engine.s.entrances.iter().map(|e| e.rate * e.duration).sum();
        engine.m_ref = rho0.mass() + inflow;
        Ok(engine)
    }

    pub fn hjb(&self) -> &HjbConfig {
        &self.spec.hjb
    }

    pub fn h(&self) -> f64 {
        self.g.spacing()
    }

    /// Slice step of the time-space solves.
    pub fn slice_dt(&self) -> f64 {
        self.spec.hjb.slice_dt.unwrap_or(self.h())
    }

    pub fn initial_density(&self) -> DensityField {
        initial_density(&self.s, &self.g)
    }

    pub fn initial_state(&self) -> State {
        let rho = self.initial_density();
        let mut st = State {
            introduced: rho.mass(),
            rho,
            t: 0.0,
            step: 0,
            ledger: ExitLedger::new(self.g.n_exits()),
            history: Vec::new(),
            evacuated: false,
        };
        self.record(&mut st);
        st
    }

    fn record(&self, st: &mut State) {
        let mass = st.rho.mass();
        st.history.push(Sample {
            t: st.t,
            mass,
            rho_max: st.rho.max(),
            introduced: st.introduced,
            exit_mass: st.ledger.per_exit().to_vec(),
        });
        if !st.evacuated && st.t >= self.inflow_end && mass <= self.spec.eps_evac * st.introduced {
            st.evacuated = true;
        }
    }

    pub fn finished(&self, st: &State) -> bool {
        st.evacuated || st.t > self.t_abort
    }

    pub fn basic_field(&self) -> VelocityField {
        self.spec
            .hjb
            .controls
            .decode_field(&self.basic_codes, &self.g)
    }

    pub fn interaction(&self, rho: &DensityField, orient: &VelocityField) -> VelocityField {
        interaction_velocity_with(&self.stencil, rho, orient, &self.g)
    }

    /// Plan against the frozen density `rho`, sensory regions oriented by `orient`.
    pub fn rational_plan(&self, rho: &DensityField, orient: &VelocityField) -> VelocityField {
        let drift = self.interaction(rho, orient);
        let phi = solve_drift_hjb(&self.g, &drift, self.hjb());
        let codes = feedback_controls(&phi, &self.g, Some(&drift), self.hjb());
        self.hjb().controls.decode_field(&codes, &self.g)
    }

    /// One transport step under the behavioral field `vb`, never past time `until`.
    pub fn step(&self, st: &mut State, vb: &VelocityField, until: f64) -> Result<()> {
        let vi = self.interaction(&st.rho, vb);
        let v = project_velocity(&vb.add(&vi), &self.g);
        let tc = &self.spec.transport;
        let h = self.h();
        let free = cfl_dt(&v, h, tc.cfl, tc.dt_max(h));
        let (dt, t_next) = if until - st.t <= free {
            (until - st.t, until)
        } else {
            (free, st.t + free)
        };
        st.rho = step_density(&st.rho, &v, dt, &self.g, &mut st.ledger)?;
        st.introduced += inject_inflow(
            &mut st.rho,
            &self.g,
            &self.s.entrances,
            st.t,
            dt,
            tc.rho_cap,
        );
        st.t = t_next;
        st.step += 1;
        self.record(st);
        Ok(())
    }

    pub fn view<'s>(&self, st: &'s State) -> StepView<'s> {
        StepView {
            step: st.step,
            time: st.t * self.time_scale(),
            density: &st.rho,
            scales: self.s.scales,
        }
    }

    fn time_scale(&self) -> f64 {
        self.s.scales.time()
    }

    /// Runs under `plan` from `st.t = t0`, sampling the density at `t0 + n dt`
    /// for `n = 0..=n_slices`. Stops once the samples are complete, or, with
    /// `to_evacuation`, once the crowd has also left (or the run aborts).
    pub fn run_sampled(
        &self,
        st: &mut State,
        plan: Plan<'_>,
        n_slices: usize,
        to_evacuation: bool,
        on_step: &mut dyn FnMut(&StepView<'_>),
    ) -> Result<Vec<DensityField>> {
        let t0 = st.t;
        let dt = self.slice_dt();
        let mut samples = vec![st.rho.clone()];
        let mut cache: Option<(usize, VelocityField)> = None;
        loop {
            let sampling = samples.len() <= n_slices;
            if !sampling && (!to_evacuation || self.finished(st)) {
                break;
            }
            if st.t > self.t_abort {
                break;
            }
            let until = if sampling {
                t0 + samples.len() as f64 * dt
            } else {
                f64::INFINITY
            };
            let vb = match plan {
                Plan::Static(v) => v,
                Plan::Slices(sol) => {
                    let n = sol.slice_at(st.t - t0);
                    if cache.as_ref().map(|c| c.0) != Some(n) {
                        cache = Some((
                            n,
                            self.hjb().controls.decode_field(sol.controls(n), &self.g),
                        ));
                    }
                    &cache.as_ref().expect("cached slice").1
                }
            };
            self.step(st, vb, until)?;
            on_step(&self.view(st));
            if sampling && st.t == until {
                samples.push(st.rho.clone());
            }
        }
        while samples.len() <= n_slices {
            samples.push(st.rho.clone());
        }
        Ok(samples)
    }

    /// `max_n |a_n - b_n|_1`, normalized by the reference mass.
    pub fn residual(&self, a: &[DensityField], b: &[DensityField]) -> f64 {
        if self.m_ref <= 0.0 {
            return 0.0;
        }
        a.iter()
            .zip(b)
            .map(|(x, y)| x.l1_distance(y))
            .fold(0.0, f64::max)
            / self.m_ref
    }

    pub fn outcome(
        &self,
        st: &State,
        fixed_point: Option<FixedPointReport>,
        horizon_warning: bool,
    ) -> SimOutcome {
        let history = History {
            samples: st.history.clone(),
            inflow_end: self.inflow_end,
            t_abort: self.t_abort,
        };
        let sc = self.s.scales;
        let physical = history.scaled(sc.time(), sc.density, sc.mass());
        SimOutcome {
            metrics: compute_metrics(&physical, self.spec.eps_evac, self.spec.used_exit_frac),
            fixed_point,
            horizon_warning,
            unreachable_cells: self.unreachable,
            t_max: self.t_max * sc.time(),
        }
    }
}

/// Source of the behavioral velocity during a forward run.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Plan<'p> {
    Static(&'p VelocityField),
    /// Per-slice controls of a time-space solve started at the run's start time.
    Slices(&'p TimeSpaceSolution),
}

#[derive(Debug, Clone)]
pub(crate) struct State {
    pub rho: DensityField,
    pub t: f64,
    pub step: usize,
    pub ledger: ExitLedger,
    pub introduced: f64,
    pub history: Vec<Sample>,
    pub evacuated: bool,
}
