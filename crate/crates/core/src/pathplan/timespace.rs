//! Time-dependent minimum-time problem in the extended time-space domain.
//!
//! Walkers advance in time at unit speed and in space with `a + v_i[rho(t)]`.
//! The value is computed backward on slices `t_n = n dt`, `n = 0..=N`:
//! `phi_n(x) = min_a { dt + I[phi_{n+1}](x + dt (a + w_n(x))) }`. The terminal
//! slice is the stationary frozen-drift value of the last density sample,
//! which is the exact solution of the problem whose density stays frozen
//! after the horizon.

use super::{
    feedback_controls, is_exit, solve_drift_hjb, HjbConfig, Padded, ValueField, EXIT_CONTROL,
    NO_CONTROL,
};
use crate::field::{DensityField, VelocityField};
use crate::interaction::{interaction_velocity_with, InteractionParams, Stencil};
use crate::scenario::CellGrid;

/// Orientation of the sensory regions used to evaluate the drift per slice.
#[derive(Debug, Clone, Copy)]
pub enum Orientation<'a> {
    /// The same orientation field on every slice.
    Static(&'a VelocityField),
    /// Control codes per slice, decoded with the solver's control set; the
    /// last entry extends to later slices.
    Slices(&'a [Vec<u8>]),
}

#[derive(Debug, Clone)]
pub struct TimeSpaceSolution {
    nx: usize,
    ny: usize,
    h: f64,
    dt: f64,
    values: Vec<Vec<f64>>,
    controls: Vec<Vec<u8>>,
    horizon_warning: bool,
}

impl TimeSpaceSolution {
    /// Number of slices, terminal included.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slice_dt(&self) -> f64 {
        self.dt
    }

    /// Time of the terminal slice relative to the start of the solve.
    pub fn horizon(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    /// Slice index governing relative time `t`; the terminal slice beyond the horizon.
    pub fn slice_at(&self, t: f64) -> usize {
        let n = (t / self.dt + 1e-9).floor();
        if n <= 0.0 {
            0
        } else {
            (n as usize).min(self.len() - 1)
        }
    }

    pub fn value(&self, n: usize) -> ValueField {
        ValueField::new(self.nx, self.ny, self.h, self.values[n].clone(), 0, true)
    }

    pub fn values(&self, n: usize) -> &[f64] {
        &self.values[n]
    }

    /// Optimal control codes on slice `n`.
    pub fn controls(&self, n: usize) -> &[u8] {
        &self.controls[n]
    }

    pub fn all_controls(&self) -> &[Vec<u8>] {
        &self.controls
    }

    /// True when more than half of the finite cells cannot exit before the
    /// horizon, so the terminal condition dominates the plan.
    pub fn horizon_warning(&self) -> bool {
        self.horizon_warning
    }
}

/// Solves the time-space problem on `[0, t_max]` against the density samples
/// `rho_traj[n]` at slice times `n dt` (the last sample extends to later
/// slices). The slice step is `cfg.slice_dt`, or the grid spacing.
pub fn solve_timespace_hjb(
    g: &CellGrid,
    rho_traj: &[DensityField],
    orient: Orientation<'_>,
    p: &InteractionParams,
    t_max: f64,
    cfg: &HjbConfig,
) -> TimeSpaceSolution {
    assert!(!rho_traj.is_empty(), "density trajectory is empty");
    let (nx, ny, h) = (g.nx(), g.ny(), g.spacing());
    let dt = cfg.slice_dt.unwrap_or(h);
    let n_last = ((t_max / dt) - 1e-9).ceil().max(1.0) as usize;
    let stencil = Stencil::new(p, h);
    let decoded: Vec<VelocityField> = match orient {
        Orientation::Static(_) => Vec::new(),
        Orientation::Slices(codes) => {
            assert!(!codes.is_empty(), "orientation slices are empty");
            codes
                .iter()
                .map(|c| cfg.controls.decode_field(c, g))
                .collect()
        }
    };
    let orient_at = |n: usize| match orient {
        Orientation::Static(v) => v,
        Orientation::Slices(_) => &decoded[n.min(decoded.len() - 1)],
    };
    let drift_at = |n: usize| {
        let rho = &rho_traj[n.min(rho_traj.len() - 1)];
        interaction_velocity_with(&stencil, rho, orient_at(n), g)
    };

    let w_term = drift_at(n_last);
    let terminal = solve_drift_hjb(g, &w_term, cfg);
    let term_controls = feedback_controls(&terminal, g, Some(&w_term), cfg);

    let mut values = vec![Vec::new(); n_last + 1];
    let mut controls = vec![Vec::new(); n_last + 1];
    values[n_last] = terminal.as_slice().to_vec();
    controls[n_last] = term_controls;

    let mut autonomous = true;
    for n in (0..n_last).rev() {
        let w = drift_at(n);
        if autonomous && w == w_term {
            values[n] = values[n_last].clone();
            controls[n] = controls[n_last].clone();
            continue;
        }
        autonomous = false;
        let next = Padded::from_values(nx, ny, &values[n + 1]);
        let (vals, codes) = backward_step(g, &next, &w, dt, cfg);
        values[n] = vals;
        controls[n] = codes;
    }

    let finite: Vec<f64> = values[0]
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    let late = finite.iter().filter(|&&v| v >= n_last as f64 * dt).count();
    TimeSpaceSolution {
        nx,
        ny,
        h,
        dt,
        values,
        controls,
        horizon_warning: 2 * late > finite.len(),
    }
}

/// One explicit backward slice update, returning values and argmin controls.
fn backward_step(
    g: &CellGrid,
    next: &Padded,
    w: &VelocityField,
    dt: f64,
    cfg: &HjbConfig,
) -> (Vec<f64>, Vec<u8>) {
    let (nx, h) = (g.nx(), g.spacing());
    let s = dt / h;
    let mut vals = vec![f64::INFINITY; g.len()];
    let mut codes = vec![NO_CONTROL; g.len()];
    for idx in 0..g.len() {
        let class = g.class_at(idx);
        if !class.is_walkable() {
            continue;
        }
        if is_exit(class) {
            vals[idx] = 0.0;
            codes[idx] = EXIT_CONTROL;
            continue;
        }
        let (i, j) = (idx % nx, idx / nx);
        let wi = w.as_slice()[idx];
        let mut best = (f64::INFINITY, NO_CONTROL);
        for (k, a) in cfg.controls.dirs().iter().enumerate() {
            let u = i as f64 + s * (a[0] + wi[0]);
            let v = j as f64 + s * (a[1] + wi[1]);
            let c = dt + next.interp(u, v);
            if c < best.0 {
                best = (c, k as u8);
            }
        }
        vals[idx] = best.0;
        codes[idx] = best.1;
    }
    (vals, codes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathplan::solve_eikonal;
    use crate::scenario::{
        classify_cells, CharacteristicScales, Exit, Rect, Scenario, Segment, Side, Units,
    };

    fn room() -> Scenario {
        Scenario {
            width: 10.0,
            height: 10.0,
            nx: 20,
            ny: 20,
            exits: vec![Exit {
                id: "e".into(),
                segment: Segment {
                    side: Side::Right,
                    from: 4.0,
                    to: 6.0,
                },
            }],
            entrances: vec![],
            obstacles: vec![Rect::new(4.0, 3.0, 1.0, 4.0)],
            rho0: vec![],
            alpha_deg: 170.0,
            sensory_radius: 1.5,
            repulsion: 1.0,
            scales: CharacteristicScales::UNIT,
            units: Units::Physical,
        }
    }

    #[test]
    fn empty_crowd_gives_eikonal_on_every_slice() {
        let s = room();
        let g = classify_cells(&s, None);
        let cfg = HjbConfig::default();
        let p = InteractionParams::from_scenario(&s);
        let rho = vec![DensityField::zeros(20, 20, 0.5)];
        let vb = VelocityField::zeros(20, 20);
        let sol = solve_timespace_hjb(&g, &rho, Orientation::Static(&vb), &p, 12.0, &cfg);
        let eik = solve_eikonal(&g, &cfg);
        assert_eq!(sol.len(), 25);
        for n in 0..sol.len() {
            assert_eq!(sol.values(n), eik.as_slice());
        }
        assert!(!sol.horizon_warning());
    }

    fn crowd() -> DensityField {
        let mut rho = DensityField::zeros(20, 20, 0.5);
        for j in 6..14 {
            for i in 11..16 {
                rho.set(i, j, 1.5);
            }
        }
        rho
    }

    #[test]
    fn frozen_crowd_matches_drift_solve() {
        let s = room();
        let g = classify_cells(&s, None);
        let cfg = HjbConfig::default();
        let p = InteractionParams::from_scenario(&s);
        let rho = crowd();
        let eik = solve_eikonal(&g, &cfg);
        let vb = feedback_velocity_of(&eik, &g, &cfg);
        let drift = crate::interaction::interaction_velocity(&rho, &vb, &p, &g);
        let stat = solve_drift_hjb(&g, &drift, &cfg);
        // Keep the density constant but let the solver walk back far enough
        // for slice 0 to forget the terminal data.
        let tail = vec![rho.clone(), rho.clone()];
        let sol = solve_timespace_hjb(&g, &tail, Orientation::Static(&vb), &p, 60.0, &cfg);
        let h = g.spacing();
        let mut worst: f64 = 0.0;
        for idx in 0..g.len() {
            let (a, b) = (sol.values(0)[idx], stat.as_slice()[idx]);
            if a.is_finite() || b.is_finite() {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst <= 3.0 * h, "max deviation {worst}");
    }

    fn feedback_velocity_of(phi: &ValueField, g: &CellGrid, cfg: &HjbConfig) -> VelocityField {
        crate::pathplan::feedback_velocity(phi, g, None, cfg)
    }

    #[test]
    fn single_step_is_one_update_of_terminal() {
        let s = room();
        let g = classify_cells(&s, None);
        let cfg = HjbConfig::default();
        let p = InteractionParams::from_scenario(&s);
        let rho0 = crowd();
        let rho1 = DensityField::zeros(20, 20, 0.5);
        let vb = VelocityField::uniform(20, 20, [1.0, 0.0]);
        let sol = solve_timespace_hjb(
            &g,
            &[rho0.clone(), rho1],
            Orientation::Static(&vb),
            &p,
            0.5,
            &cfg,
        );
        assert_eq!(sol.len(), 2);
        let term = solve_eikonal(&g, &cfg);
        assert_eq!(sol.values(1), term.as_slice());
        let w = crate::interaction::interaction_velocity(&rho0, &vb, &p, &g);
        let h = g.spacing();
        for (i, j) in [(2usize, 2usize), (12, 10), (18, 17)] {
            let c = g.center(i, j);
            let wi = w.get(i, j);
            let mut best = f64::INFINITY;
            for a in cfg.controls.dirs() {
                let f = term.interpolate(c[0] + h * (a[0] + wi[0]), c[1] + h * (a[1] + wi[1]));
                best = best.min(h + f);
            }
            assert_eq!(sol.values(0)[g.idx(i, j)], best);
        }
    }

    #[test]
    fn short_horizon_raises_warning() {
        let s = room();
        let g = classify_cells(&s, None);
        let cfg = HjbConfig::default();
        let p = InteractionParams::from_scenario(&s);
        let vb = VelocityField::uniform(20, 20, [1.0, 0.0]);
        let sol = solve_timespace_hjb(&g, &[crowd()], Orientation::Static(&vb), &p, 1.0, &cfg);
        assert!(sol.horizon_warning());
    }

    #[test]
    fn slice_lookup() {
        let s = room();
        let g = classify_cells(&s, None);
        let cfg = HjbConfig::default();
        let p = InteractionParams::from_scenario(&s);
        let vb = VelocityField::zeros(20, 20);
        let sol = solve_timespace_hjb(
            &g,
            &[DensityField::zeros(20, 20, 0.5)],
            Orientation::Static(&vb),
            &p,
            2.0,
            &cfg,
        );
        assert_eq!(sol.len(), 5);
        assert_eq!(sol.slice_at(0.0), 0);
        assert_eq!(sol.slice_at(0.49), 0);
        assert_eq!(sol.slice_at(0.5), 1);
        assert_eq!(sol.slice_at(100.0), 4);
        assert_eq!(sol.horizon(), 2.0);
    }
}
