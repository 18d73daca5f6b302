//! Nonlocal repulsive interaction velocity.
//!
//! Each walker at `x` feels `v_i(x) = sum_y F_cut(y - x) rho(y) h^2` over the
//! free cells `y` of its sensory region: a circular sector of radius `R` and
//! angular width `alpha` oriented along the behavioral velocity at `x`. The
//! kernel is `F_cut(r) = -F r / max(|r|^2, r_min^2)`; the self cell is dropped.

use crate::error::{Error, Result};
use crate::field::{DensityField, VelocityField};
use crate::scenario::{CellGrid, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionParams {
    /// Angular width of the sensory sector, radians.
    pub alpha: f64,
    /// Sensory radius.
    pub radius: f64,
    /// Repulsion strength `F`.
    pub strength: f64,
    /// Kernel cutoff distance.
    pub r_min: f64,
}

impl InteractionParams {
    pub fn new(alpha: f64, radius: f64, strength: f64, r_min: f64) -> Result<Self> {
        let p = Self {
            alpha,
            radius,
            strength,
            r_min,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters of a scenario, in its own units, with `r_min = h`.
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            alpha: s.alpha_deg.to_radians(),
            radius: s.sensory_radius,
            strength: s.repulsion,
            r_min: s.spacing(),
        }
    }

    pub fn with_strength(self, strength: f64) -> Self {
        Self { strength, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0 * std::f64::consts::PI + 1e-12) {
            return Err(Error::invalid("alpha", "must lie in (0, 2 pi]"));
        }
        if !(self.radius > 0.0) {
            return Err(Error::invalid("R", "must be strictly positive"));
        }
        if !(self.strength >= 0.0) {
            return Err(Error::invalid("F", "must be nonnegative"));
        }
        if !(self.r_min > 0.0) {
            return Err(Error::invalid("r_min", "must be strictly positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Tap {
    di: isize,
    dj: isize,
    /// `r / |r|`, for the sector test.
    dir: [f64; 2],
    /// `-r / max(|r|^2, r_min^2) * h^2`, the kernel weight without `F`.
    weight: [f64; 2],
}

/// The cell offsets of the radius-`R` disc with their kernel weights,
/// precomputed once per grid spacing and parameter set.
#[derive(Debug, Clone)]
pub struct Stencil {
    taps: Vec<Tap>,
    cos_half: f64,
    full_disc: bool,
    strength: f64,
}

impl Stencil {
    pub fn new(p: &InteractionParams, h: f64) -> Self {
        let reach = (p.radius / h).floor() as isize + 1;
        let r2_min = p.r_min * p.r_min;
        let mut taps = Vec::new();
        for dj in -reach..=reach {
            for di in -reach..=reach {
                if di == 0 && dj == 0 {
                    continue;
                }
                let r = [di as f64 * h, dj as f64 * h];
                let n2 = r[0] * r[0] + r[1] * r[1];
                let n = n2.sqrt();
                if n > p.radius * (1.0 + 1e-12) {
                    continue;
                }
                let denom = n2.max(r2_min);
                taps.push(Tap {
                    di,
                    dj,
                    dir: [r[0] / n, r[1] / n],
                    weight: [-r[0] / denom * h * h, -r[1] / denom * h * h],
                });
            }
        }
        let cos_half = (0.5 * p.alpha).cos();
        Self {
            taps,
            cos_half,
            full_disc: cos_half <= -1.0 + 1e-12,
            strength: p.strength,
        }
    }

    #[inline]
    fn sees(&self, tap: &Tap, dir: Option<[f64; 2]>) -> bool {
        match dir {
            Some(d) if !self.full_disc => {
                tap.dir[0] * d[0] + tap.dir[1] * d[1] >= self.cos_half - 1e-12
            }
            _ => true,
        }
    }

    /// Interaction velocity at one free cell.
    pub fn velocity_at(
        &self,
        i: usize,
        j: usize,
        dir: Option<[f64; 2]>,
        rho: &[f64],
        g: &CellGrid,
    ) -> [f64; 2] {
        let (nx, ny) = (g.nx() as isize, g.ny() as isize);
        let mut acc = [0.0; 2];
        for tap in &self.taps {
            let (yi, yj) = (i as isize + tap.di, j as isize + tap.dj);
            if yi < 0 || yj < 0 || yi >= nx || yj >= ny {
                continue;
            }
            let y = (yj * nx + yi) as usize;
            let r = rho[y];
            if r == 0.0 || !g.class_at(y).is_walkable() || !self.sees(tap, dir) {
                continue;
            }
            acc[0] += tap.weight[0] * r;
            acc[1] += tap.weight[1] * r;
        }
        [self.strength * acc[0], self.strength * acc[1]]
    }
}

/// Unit vector along `v`, or `None` when `v` vanishes.
#[inline]
pub fn orientation(v: [f64; 2]) -> Option<[f64; 2]> {
    let n = v[0].hypot(v[1]);
    (n > 0.0).then(|| [v[0] / n, v[1] / n])
}

/// Free cells in the sensory region of cell `x` (the self cell excluded).
/// Without a direction the region is the full disc.
pub fn sensory_mask(
    x: usize,
    dir: Option<[f64; 2]>,
    p: &InteractionParams,
    g: &CellGrid,
) -> Vec<usize> {
    let stencil = Stencil::new(p, g.spacing());
    let (i, j) = g.coords(x);
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let dir = dir.and_then(orientation);
    stencil
        .taps
        .iter()
        .filter(|t| stencil.sees(t, dir))
        .filter_map(|t| {
            let (yi, yj) = (i as isize + t.di, j as isize + t.dj);
            if yi < 0 || yj < 0 || yi >= nx || yj >= ny {
                return None;
            }
            let y = (yj * nx + yi) as usize;
            g.class_at(y).is_walkable().then_some(y)
        })
        .collect()
}

/// Interaction velocity over the whole grid, each sector oriented by `vb`.
/// Zero on obstacle cells.
pub fn interaction_velocity(
    rho: &DensityField,
    vb: &VelocityField,
    p: &InteractionParams,
    g: &CellGrid,
) -> VelocityField {
    interaction_velocity_with(&Stencil::new(p, g.spacing()), rho, vb, g)
}

/// [`interaction_velocity`] with a prebuilt stencil.
pub fn interaction_velocity_with(
    stencil: &Stencil,
    rho: &DensityField,
    vb: &VelocityField,
    g: &CellGrid,
) -> VelocityField {
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = VelocityField::zeros(nx, ny);
    if stencil.strength == 0.0 || rho.as_slice().iter().all(|&r| r == 0.0) {
        return out;
    }
    let dens = rho.as_slice();
    let orient = vb.as_slice();
    let data = out.as_mut_slice();
    for j in 0..ny {
        for i in 0..nx {
            let idx = j * nx + i;
            if g.class_at(idx).is_walkable() {
                data[idx] = stencil.velocity_at(i, j, orientation(orient[idx]), dens, g);
            }
        }
    }
    out
}
