//! Stationary solves: the eikonal equation and the frozen-drift HJB equation.
//!
//! Both use the update `phi(x) = min_a { D + I[phi](x + D (a + w)) }` with local
//! step `D = h / |a + w|`, so every foot point lies one cell spacing away from
//! `x`. The foot's triangle may contain `x` itself; that term is moved to the
//! left-hand side and solved for exactly.

use super::{
    is_exit, split, ControlSet, HjbConfig, Padded, Triangle, ValueField, EXIT_CONTROL, NO_CONTROL,
};
use crate::field::VelocityField;
use crate::scenario::CellGrid;

/// One-step stencil of a control for zero drift, identical for every cell.
#[derive(Debug, Clone)]
struct Tap {
    self_w: f64,
    others: Vec<(isize, f64)>,
}

fn static_taps(controls: &ControlSet, stride: usize) -> Vec<Tap> {
    controls
        .dirs()
        .iter()
        .map(|a| {
            let ((i0, fx), (j0, fy)) = (split(a[0]), split(a[1]));
            let tri = Triangle::new(fx, fy);
            let mut tap = Tap {
                self_w: 0.0,
                others: Vec::with_capacity(3),
            };
            for (di, dj, w) in tri.vertices() {
                if w <= 0.0 {
                    continue;
                }
                let (ri, rj) = (i0 as isize + di as isize, j0 as isize + dj as isize);
                if ri == 0 && rj == 0 {
                    tap.self_w += w;
                } else {
                    tap.others.push((rj * stride as isize + ri, w));
                }
            }
            tap
        })
        .collect()
}

/// Evaluates the one-step candidates of one cell. Shared by the solver and the
/// feedback so that both minimize the very same function.
struct Stepper<'a> {
    taps: Vec<Tap>,
    controls: &'a ControlSet,
    stride: isize,
    h: f64,
    speed_floor: f64,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a HjbConfig, stride: usize, h: f64) -> Self {
        Self {
            taps: static_taps(&cfg.controls, stride),
            controls: &cfg.controls,
            stride: stride as isize,
            h,
            speed_floor: cfg.speed_floor,
        }
    }

    #[inline]
    fn candidate(&self, data: &[f64], p: usize, k: usize, w: [f64; 2]) -> f64 {
        if w == [0.0, 0.0] {
            let tap = &self.taps[k];
            let mut acc = self.h;
            for &(off, wt) in &tap.others {
                acc += wt * data[(p as isize + off) as usize];
            }
            return acc / (1.0 - tap.self_w);
        }
        let a = self.controls.dir(k);
        let b = [a[0] + w[0], a[1] + w[1]];
        let n = b[0].hypot(b[1]);
        if n < self.speed_floor {
            return f64::INFINITY;
        }
        let e = [b[0] / n, b[1] / n];
        let ((i0, fx), (j0, fy)) = (split(e[0]), split(e[1]));
        let tri = Triangle::new(fx, fy);
        let mut self_w = 0.0;
        let mut acc = self.h / n;
        for (di, dj, wt) in tri.vertices() {
            if wt <= 0.0 {
                continue;
            }
            let (ri, rj) = (i0 as isize + di as isize, j0 as isize + dj as isize);
            if ri == 0 && rj == 0 {
                self_w += wt;
            } else {
                acc += wt * data[(p as isize + rj * self.stride + ri) as usize];
            }
        }
        acc / (1.0 - self_w)
    }

    /// Lowest candidate and the lowest control index attaining it.
    #[inline]
    fn best(&self, data: &[f64], p: usize, w: [f64; 2]) -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for k in 0..self.controls.len() {
            let c = self.candidate(data, p, k, w);
            if c < best.0 {
                best = (c, k);
            }
        }
        best
    }
}

pub(crate) fn solve_static_traced(
    g: &CellGrid,
    drift: Option<&VelocityField>,
    cfg: &HjbConfig,
    mut on_pass: impl FnMut(&[f64]),
) -> ValueField {
    let (nx, ny, h) = (g.nx(), g.ny(), g.spacing());
    let mut phi = Padded::infinite(nx, ny);
    for idx in 0..g.len() {
        if is_exit(g.class_at(idx)) {
            let (i, j) = g.coords(idx);
            let p = phi.at(i, j);
            phi.data[p] = 0.0;
        }
    }
    let zero = [0.0, 0.0];
    let drift = drift.map(VelocityField::as_slice);
    let stepper = Stepper::new(cfg, phi.stride, h);

    let mut passes = 0;
    let mut converged = false;
    while passes < cfg.max_passes {
        let (rev_i, rev_j) = match passes % 4 {
            0 => (false, false),
            1 => (true, false),
            2 => (true, true),
            _ => (false, true),
        };
        passes += 1;
        let mut change: f64 = 0.0;
        for jj in 0..ny {
            let j = if rev_j { ny - 1 - jj } else { jj };
            for ii in 0..nx {
                let i = if rev_i { nx - 1 - ii } else { ii };
                let idx = j * nx + i;
                let class = g.class_at(idx);
                if !class.is_walkable() || is_exit(class) {
                    continue;
                }
                let w = drift.map_or(zero, |d| d[idx]);
                let p = phi.at(i, j);
                let (cand, _) = stepper.best(&phi.data, p, w);
                let old = phi.data[p];
                if cand < old {
                    phi.data[p] = cand;
                    change = change.max(old - cand);
                }
            }
        }
        on_pass(&phi.data);
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    ValueField::new(nx, ny, h, phi.unpad(), passes, converged)
}

/// Minimum time to the exits at unit speed.
pub fn solve_eikonal(g: &CellGrid, cfg: &HjbConfig) -> ValueField {
    solve_static_traced(g, None, cfg, |_| {})
}

/// Minimum time to the exits when every walker is also carried by `drift`.
/// Cells where the drift cancels every control stay unreachable.
pub fn solve_drift_hjb(g: &CellGrid, drift: &VelocityField, cfg: &HjbConfig) -> ValueField {
    solve_static_traced(g, Some(drift), cfg, |_| {})
}

/// Minimizing control index per cell: [`EXIT_CONTROL`] on exits and
/// [`NO_CONTROL`] where no finite candidate exists.
pub fn feedback_controls(
    phi: &ValueField,
    g: &CellGrid,
    drift: Option<&VelocityField>,
    cfg: &HjbConfig,
) -> Vec<u8> {
    let pad = Padded::from_values(phi.nx(), phi.ny(), phi.as_slice());
    let stepper = Stepper::new(cfg, pad.stride, phi.spacing());
    let drift = drift.map(VelocityField::as_slice);
    (0..g.len())
        .map(|idx| {
            let class = g.class_at(idx);
            if !class.is_walkable() {
                return NO_CONTROL;
            }
            if is_exit(class) {
                return EXIT_CONTROL;
            }
            if phi.as_slice()[idx].is_infinite() {
                return NO_CONTROL;
            }
            let (i, j) = g.coords(idx);
            let w = drift.map_or([0.0, 0.0], |d| d[idx]);
            match stepper.best(&pad.data, pad.at(i, j), w) {
                (c, k) if c.is_finite() => k as u8,
                _ => NO_CONTROL,
            }
        })
        .collect()
}

/// Optimal behavioral velocity: the unit control minimizing the one-step value
/// at each cell, the exit normal on exit cells and zero where `phi` is
/// infinite.
pub fn feedback_velocity(
    phi: &ValueField,
    g: &CellGrid,
    drift: Option<&VelocityField>,
    cfg: &HjbConfig,
) -> VelocityField {
    cfg.controls
        .decode_field(&feedback_controls(phi, g, drift, cfg), g)
}
