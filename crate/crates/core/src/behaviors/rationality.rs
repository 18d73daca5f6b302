//! The four behaviors: one plan, frozen-crowd replanning, windowed look-ahead
//! and full look-ahead.

use super::engine::{Engine, Plan, State};
use super::{FixedPointReport, SimOutcome, StepView};
use crate::error::Result;
use crate::field::VelocityField;
use crate::pathplan::{solve_timespace_hjb, Orientation, TimeSpaceSolution};

type Observer<'o> = &'o mut dyn FnMut(&StepView<'_>);

/// Plans once on the empty domain and keeps that field for the whole run.
pub(crate) fn run_basic(e: &Engine<'_>, on_step: Observer<'_>) -> Result<SimOutcome> {
    let vb = e.basic_field();
    let mut st = e.initial_state();
    on_step(&e.view(&st));
    while !e.finished(&st) {
        e.step(&mut st, &vb, f64::INFINITY)?;
        on_step(&e.view(&st));
    }
    Ok(e.outcome(&st, None, false))
}

/// Every `replan_every` steps, plans against the frozen current density with
/// sensory regions oriented by the previous plan.
pub(crate) fn run_rational(e: &Engine<'_>, on_step: Observer<'_>) -> Result<SimOutcome> {
    let mut vb = e.basic_field();
    let mut st = e.initial_state();
    on_step(&e.view(&st));
    while !e.finished(&st) {
        if st.step.is_multiple_of(e.spec.replan_every) {
            vb = e.rational_plan(&st.rho, &vb);
        }
        e.step(&mut st, &vb, f64::INFINITY)?;
        on_step(&e.view(&st));
    }
    Ok(e.outcome(&st, None, false))
}

/// Outcome of a coupled fixed point over a window.
struct Coupled {
    solution: TimeSpaceSolution,
    report: FixedPointReport,
    warning: bool,
}

/// Damped fixed point between the time-space plan and the forward density
/// over `n_slices` slices from the state `start`, seeded by running `seed`.
fn coupled_fixed_point(
    e: &Engine<'_>,
    start: &State,
    seed: &VelocityField,
    seed_codes: Vec<u8>,
    n_slices: usize,
) -> Result<Coupled> {
    let horizon = n_slices as f64 * e.slice_dt();
    let mut traj = e.run_sampled(
        &mut start.clone(),
        Plan::Static(seed),
        n_slices,
        false,
        &mut |_| {},
    )?;
    let mut orient = vec![seed_codes];
    let mut report = FixedPointReport::default();
    let mut warning = false;
    let mut best: Option<(f64, TimeSpaceSolution)> = None;
    for _ in 0..e.spec.fp_max_iter {
        let sol = solve_timespace_hjb(
            &e.g,
            &traj,
            Orientation::Slices(&orient),
            &e.params,
            horizon,
            e.hjb(),
        );
        warning |= sol.horizon_warning();
        let hat = e.run_sampled(
            &mut start.clone(),
            Plan::Slices(&sol),
            n_slices,
            false,
            &mut |_| {},
        )?;
        let res = e.residual(&hat, &traj);
        report.iterations += 1;
        report.residuals.push(res);
        let done = res < e.spec.fp_tol;
        orient = sol.all_controls().to_vec();
        if best.as_ref().is_none_or(|b| res < b.0) {
            best = Some((res, sol));
        }
        if done {
            report.converged = true;
            break;
        }
        for (a, b) in traj.iter_mut().zip(&hat) {
            a.blend(b, e.spec.fp_damping);
        }
    }
    let (_, solution) = best.expect("at least one fixed-point iteration");
    Ok(Coupled {
        solution,
        report,
        warning,
    })
}

fn slices_for(e: &Engine<'_>, horizon: f64) -> usize {
    ((horizon / e.slice_dt()) - 1e-9).ceil().max(1.0) as usize
}

/// Solves one global coupling between planning and crowd evolution on
/// `[0, t_max]`, seeded by the basic trajectory, and reports the forward run
/// of the best plan found.
pub(crate) fn run_highly_rational(e: &Engine<'_>, on_step: Observer<'_>) -> Result<SimOutcome> {
    let n = slices_for(e, e.t_max);
    let start = e.initial_state();
    let c = coupled_fixed_point(e, &start, &e.basic_field(), e.basic_codes.clone(), n)?;
    let mut st = start;
    on_step(&e.view(&st));
    e.run_sampled(&mut st, Plan::Slices(&c.solution), n, true, on_step)?;
    Ok(e.outcome(&st, Some(c.report), c.warning))
}

/// At each replan time, solves the coupling over the window `[tau, tau + theta]`
/// with the crowd frozen afterwards, and follows the plan's first slice. A
/// zero window is the rational behavior.
pub(crate) fn run_theta_rational(e: &Engine<'_>, on_step: Observer<'_>) -> Result<SimOutcome> {
    if e.theta == 0.0 {
        return run_rational(e, on_step);
    }
    let n = slices_for(e, e.theta);
    let controls = &e.hjb().controls;
    let mut vb = e.basic_field();
    let mut codes = e.basic_codes.clone();
    let mut warning = false;
    let mut st = e.initial_state();
    on_step(&e.view(&st));
    while !e.finished(&st) {
        if st.step.is_multiple_of(e.spec.replan_every) {
            let c = coupled_fixed_point(e, &st, &vb, codes, n)?;
            warning |= c.warning;
            codes = c.solution.controls(0).to_vec();
            vb = controls.decode_field(&codes, &e.g);
        }
        e.step(&mut st, &vb, f64::INFINITY)?;
        on_step(&e.view(&st));
    }
    Ok(e.outcome(&st, None, warning))
}
