//! Minimum-time planning: semi-Lagrangian fast-sweeping solvers for the
//! eikonal, frozen-drift and time-space HJB equations, and the feedback
//! velocities they induce.
//!
//! Values live on cell centers. Interpolation is piecewise linear on the
//! triangulation obtained by cutting every square of four neighboring centers
//! along its `(i, j)`-`(i + 1, j + 1)` diagonal. A foot point is usable only if
//! every vertex carrying positive weight is a finite-valued walkable cell, so
//! walls and obstacles act as state constraints.

mod stationary;
mod timespace;

use crate::field::VelocityField;
use crate::scenario::{CellClass, CellGrid};

pub use stationary::{feedback_controls, feedback_velocity, solve_drift_hjb, solve_eikonal};
pub use timespace::{solve_timespace_hjb, Orientation, TimeSpaceSolution};

/// Control code of a cell with no usable direction.
pub const NO_CONTROL: u8 = u8::MAX;
/// Control code of an exit cell, which moves along the exit normal.
pub const EXIT_CONTROL: u8 = u8::MAX - 1;

/// Width of the ring of `+inf` ghost cells around padded value arrays.
pub(crate) const PAD: usize = 2;

/// Unit directions equally spaced on the circle, `a_k = (cos 2pi k/m, sin 2pi k/m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet {
    dirs: Vec<[f64; 2]>,
}

impl ControlSet {
    pub fn new(m: usize) -> Self {
        assert!(
            (1..EXIT_CONTROL as usize).contains(&m),
            "control count out of range"
        );
        let dirs = (0..m)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        Self { dirs }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    #[inline]
    pub fn dir(&self, k: usize) -> [f64; 2] {
        self.dirs[k]
    }

    pub fn dirs(&self) -> &[[f64; 2]] {
        &self.dirs
    }

    /// Velocity encoded by a control code at cell `idx`.
    #[inline]
    pub fn decode(&self, code: u8, idx: usize, g: &CellGrid) -> [f64; 2] {
        match code {
            NO_CONTROL => [0.0, 0.0],
            EXIT_CONTROL => g.exit_normal(idx).unwrap_or([0.0, 0.0]),
            k => self.dirs[k as usize],
        }
    }

    /// Velocity field of a per-cell control code array.
    pub fn decode_field(&self, codes: &[u8], g: &CellGrid) -> VelocityField {
        let data = codes
            .iter()
            .enumerate()
            .map(|(idx, &c)| self.decode(c, idx, g))
            .collect();
        VelocityField::from_vec(g.nx(), g.ny(), data)
    }
}

impl Default for ControlSet {
    fn default() -> Self {
        Self::new(32)
    }
}

/// Solver settings shared by every HJB solve.
#[derive(Debug, Clone, PartialEq)]
pub struct HjbConfig {
    pub controls: ControlSet,
    /// Sup-norm change below which sweeping stops.
    pub tol: f64,
    /// Maximum number of single-ordering sweeps.
    pub max_passes: usize,
    /// Smallest usable `|a + drift|`.
    pub speed_floor: f64,
    /// Time step between slices of the time-space solve; the grid spacing when `None`.
    pub slice_dt: Option<f64>,
}

impl Default for HjbConfig {
    fn default() -> Self {
        Self {
            controls: ControlSet::default(),
            tol: 1e-6,
            max_passes: 500,
            speed_floor: 1e-6,
            slice_dt: None,
        }
    }
}

/// Minimum time to the exits per cell; `+inf` on obstacles and on cells that
/// cannot reach an exit.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    nx: usize,
    ny: usize,
    h: f64,
    data: Vec<f64>,
    passes: usize,
    converged: bool,
}

impl ValueField {
    pub(crate) fn new(
        nx: usize,
        ny: usize,
        h: f64,
        data: Vec<f64>,
        passes: usize,
        converged: bool,
    ) -> Self {
        Self {
            nx,
            ny,
            h,
            data,
            passes,
            converged,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sweeps performed by the solver.
    pub fn passes(&self) -> usize {
        self.passes
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn max_finite(&self) -> f64 {
        self.data
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }

    /// Walkable cells left at `+inf`.
    pub fn unreachable_count(&self, g: &CellGrid) -> usize {
        self.data
            .iter()
            .enumerate()
            .filter(|(idx, v)| g.class_at(*idx).is_walkable() && v.is_infinite())
            .count()
    }

    /// Linear interpolation at a physical point, `+inf` when unusable.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let pad = Padded::from_values(self.nx, self.ny, &self.data);
        pad.interp(x / self.h - 0.5, y / self.h - 0.5)
    }
}

/// Cell values embedded in a `+inf` ghost ring of width [`PAD`].
#[derive(Debug, Clone)]
pub(crate) struct Padded {
    pub nx: usize,
    pub ny: usize,
    pub stride: usize,
    pub data: Vec<f64>,
}

impl Padded {
    pub fn infinite(nx: usize, ny: usize) -> Self {
        let stride = nx + 2 * PAD;
        Self {
            nx,
            ny,
            stride,
            data: vec![f64::INFINITY; stride * (ny + 2 * PAD)],
        }
    }

    pub fn from_values(nx: usize, ny: usize, values: &[f64]) -> Self {
        let mut p = Self::infinite(nx, ny);
        for j in 0..ny {
            let row = p.at(0, j);
            p.data[row..row + nx].copy_from_slice(&values[j * nx..(j + 1) * nx]);
        }
        p
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> usize {
        (j + PAD) * self.stride + i + PAD
    }

    pub fn unpad(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            let row = self.at(0, j);
            out.extend_from_slice(&self.data[row..row + self.nx]);
        }
        out
    }

    /// Interpolates at fractional cell coordinates (`(i, j)` is the center of
    /// cell `(i, j)`).
    #[inline]
    pub fn interp(&self, u: f64, v: f64) -> f64 {
        let ((i0, fx), (j0, fy)) = (split(u), split(v));
        let lo = -(PAD as f64);
        if !(i0 >= lo
            && j0 >= lo
            && i0 + 1.0 < (self.nx + PAD) as f64
            && j0 + 1.0 < (self.ny + PAD) as f64)
        {
            return f64::INFINITY;
        }
        let base = ((j0 as isize + PAD as isize) as usize) * self.stride
            + (i0 as isize + PAD as isize) as usize;
        Triangle::new(fx, fy).eval(&self.data, base, self.stride)
    }
}

/// Integer part and fraction of a cell coordinate. Coordinates within
/// round-off of a node snap onto it, so a vanishing weight never lands on a
/// ghost or obstacle vertex.
#[inline]
pub(crate) fn split(u: f64) -> (f64, f64) {
    const SNAP: f64 = 1e-10;
    let r = u.round();
    if (u - r).abs() < SNAP {
        (r, 0.0)
    } else {
        let f = u.floor();
        (f, u - f)
    }
}

/// Barycentric weights of a point inside the unit square `[0,1]^2` with
/// respect to the triangle of the diagonal split that contains it. Vertices
/// are `(0,0)`, `mid` and `(1,1)` where `mid` is `(1,0)` below the diagonal and
/// `(0,1)` above it.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Triangle {
    pub w00: f64,
    pub wmid: f64,
    pub w11: f64,
    pub below: bool,
}

impl Triangle {
    #[inline]
    pub fn new(fx: f64, fy: f64) -> Self {
        if fx >= fy {
            Self {
                w00: 1.0 - fx,
                wmid: fx - fy,
                w11: fy,
                below: true,
            }
        } else {
            Self {
                w00: 1.0 - fy,
                wmid: fy - fx,
                w11: fx,
                below: false,
            }
        }
    }

    /// `(di, dj, weight)` of the three vertices relative to the square's
    /// lower-left corner.
    #[inline]
    pub fn vertices(&self) -> [(usize, usize, f64); 3] {
        let mid = if self.below { (1, 0) } else { (0, 1) };
        [
            (0, 0, self.w00),
            (mid.0, mid.1, self.wmid),
            (1, 1, self.w11),
        ]
    }

    #[inline]
    pub fn eval(&self, data: &[f64], base: usize, stride: usize) -> f64 {
        let mut acc = 0.0;
        for (di, dj, w) in self.vertices() {
            if w > 0.0 {
                acc += w * data[base + dj * stride + di];
            }
        }
        acc
    }
}

#[inline]
pub(crate) fn is_exit(c: CellClass) -> bool {
    matches!(c, CellClass::Exit(_))
}
