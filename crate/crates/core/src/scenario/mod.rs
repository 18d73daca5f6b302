//! Walking area, targets, obstacles, initial and inflow data, physical scales.
//!
//! A [`Scenario`] is immutable once validated. Lengths are in meters, densities
//! in ped/m^2, speeds in m/s and times in seconds, unless the scenario has been
//! passed through [`Scenario::nondimensionalize`], in which case every quantity
//! is expressed in the units of its [`CharacteristicScales`].

mod file;
mod grid;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DensityField;

pub use file::{load_scenario, parse_scenario, ScenarioFile};
pub use grid::{classify_cells, CellClass, CellGrid, Face};

/// Characteristic length, speed and density used to make the model dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicScales {
    /// Length, m.
    pub length: f64,
    /// Speed, m/s.
    pub speed: f64,
    /// Density, ped/m^2.
    pub density: f64,
}

impl CharacteristicScales {
    pub const UNIT: CharacteristicScales = CharacteristicScales {
        length: 1.0,
        speed: 1.0,
        density: 1.0,
    };

    /// Characteristic time `L / V`.
    pub fn time(&self) -> f64 {
        self.length / self.speed
    }

    /// Pedestrians represented by one unit of dimensionless mass, `rho L^2`.
    pub fn mass(&self) -> f64 {
        self.density * self.length * self.length
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("scales.L", self.length),
            ("scales.V", self.speed),
            ("scales.rho", self.density),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be finite and strictly positive"));
            }
        }
        Ok(())
    }
}

impl Default for CharacteristicScales {
    fn default() -> Self {
        Self::UNIT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

impl Side {
    /// Outward unit normal of the domain boundary on this side.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Bottom => [0.0, -1.0],
        }
    }
}

/// A piece of the outer boundary: the points of `side` whose coordinate along
/// the side (x for top/bottom, y for left/right) lies in `[from, to]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub side: Side,
    pub from: f64,
    pub to: f64,
}

impl Segment {
    fn overlaps(&self, other: &Segment) -> bool {
        self.side == other.side && self.from < other.to && other.from < self.to
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exit {
    pub id: String,
    pub segment: Segment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entrance {
    pub id: String,
    pub segment: Segment,
    /// Inflow rate, ped/s.
    pub rate: f64,
    /// Inflow duration, s.
    pub duration: f64,
}

/// Axis-aligned rectangle given by its lower-left corner and side lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn x_max(&self) -> f64 {
        self.x + self.w
    }

    pub fn y_max(&self) -> f64 {
        self.y + self.h
    }

    /// Half-open membership `[x, x + w) x [y, y + h)`, used for rasterization.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        px >= self.x && px < self.x_max() && py >= self.y && py < self.y_max()
    }

    /// Overlap with positive area; touching edges do not count.
    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.x_max()
            && other.x < self.x_max()
            && self.y < other.y_max()
            && other.y < self.y_max()
    }

    pub fn within(&self, width: f64, height: f64) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.x_max() <= width && self.y_max() <= height
    }

    fn scaled(&self, c: f64) -> Rect {
        Rect::new(self.x * c, self.y * c, self.w * c, self.h * c)
    }
}

/// Uniform density over a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityBlock {
    pub rect: Rect,
    pub density: f64,
}

/// Controlled obstacle: barycenter and side lengths, in the length units of the
/// scenario it is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleParam {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl ObstacleParam {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x - 0.5 * self.w, self.y - 0.5 * self.h, self.w, self.h)
    }

    pub fn scaled(&self, c: f64) -> ObstacleParam {
        ObstacleParam::new(self.x * c, self.y * c, self.w * c, self.h * c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    Physical,
    Dimensionless,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub exits: Vec<Exit>,
    pub entrances: Vec<Entrance>,
    pub obstacles: Vec<Rect>,
    pub rho0: Vec<DensityBlock>,
    /// Visual angle, degrees.
    pub alpha_deg: f64,
    /// Sensory radius.
    pub sensory_radius: f64,
    /// Repulsion strength `F`.
    pub repulsion: f64,
    pub scales: CharacteristicScales,
    pub units: Units,
}

impl Scenario {
    /// Grid spacing. Cells are square.
    pub fn spacing(&self) -> f64 {
        self.width / self.nx as f64
    }

    /// Checks every scenario invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        self.scales.validate()?;
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::invalid(
                "domain.nx/ny",
                "need at least 3 cells per axis",
            ));
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::invalid(
                "domain.width/height",
                "must be strictly positive",
            ));
        }
        let hx = self.width / self.nx as f64;
        let hy = self.height / self.ny as f64;
        if ((hx - hy) / hx).abs() > 1e-9 {
            return Err(Error::invalid(
                "domain",
                format!("cells must be square (width/nx = {hx}, height/ny = {hy})"),
            ));
        }
        if !(self.alpha_deg > 0.0 && self.alpha_deg <= 360.0) {
            return Err(Error::invalid("params.alpha_deg", "must lie in (0, 360]"));
        }
        if !(self.sensory_radius > 0.0) {
            return Err(Error::invalid("params.R", "must be strictly positive"));
        }
        if !(self.repulsion >= 0.0) {
            return Err(Error::invalid("params.F", "must be nonnegative"));
        }
        if self.exits.is_empty() {
            return Err(Error::invalid("exits", "at least one exit is required"));
        }

        let mut segments: Vec<(String, Segment)> = Vec::new();
        for (k, e) in self.exits.iter().enumerate() {
            let field = format!("exits[{k}] ({})", e.id);
            self.check_segment(&field, &e.segment)?;
            segments.push((field, e.segment));
        }
        for (k, e) in self.entrances.iter().enumerate() {
            let field = format!("entrances[{k}] ({})", e.id);
            self.check_segment(&field, &e.segment)?;
            if !(e.rate >= 0.0 && e.duration >= 0.0) {
                return Err(Error::invalid(
                    field,
                    "rate and duration must be nonnegative",
                ));
            }
            segments.push((field, e.segment));
        }
        for a in 0..segments.len() {
            for b in a + 1..segments.len() {
                if segments[a].1.overlaps(&segments[b].1) {
                    return Err(Error::invalid(
                        segments[b].0.clone(),
                        format!("overlaps {}", segments[a].0),
                    ));
                }
            }
        }

        for (k, o) in self.obstacles.iter().enumerate() {
            let field = format!("obstacles[{k}]");
            if !(o.w > 0.0 && o.h > 0.0) {
                return Err(Error::invalid(field, "side lengths must be positive"));
            }
            if !o.within(self.width, self.height) {
                return Err(Error::invalid(field, "obstacle outside domain"));
            }
            for (b, block) in self.rho0.iter().enumerate() {
                if block.density > 0.0 && o.intersects(&block.rect) {
                    return Err(Error::invalid(
                        field,
                        format!("obstacle overlaps initial density rho0[{b}]"),
                    ));
                }
            }
        }
        for (k, b) in self.rho0.iter().enumerate() {
            let field = format!("rho0[{k}]");
            if !(b.density >= 0.0 && b.density.is_finite()) {
                return Err(Error::invalid(field, "density must be nonnegative"));
            }
            if !(b.rect.w > 0.0 && b.rect.h > 0.0) || !b.rect.within(self.width, self.height) {
                return Err(Error::invalid(
                    field,
                    "block must be a rectangle inside the domain",
                ));
            }
        }
        Ok(())
    }

    fn check_segment(&self, field: &str, s: &Segment) -> Result<()> {
        let len = match s.side {
            Side::Top | Side::Bottom => self.width,
            Side::Left | Side::Right => self.height,
        };
        if !(s.from < s.to && s.from >= 0.0 && s.to <= len) {
            return Err(Error::invalid(
                field,
                "segment does not lie on the boundary",
            ));
        }
        Ok(())
    }

    /// Rescales every quantity by the characteristic scales: lengths by `L`,
    /// densities by `rho`, times by `L / V`, and `F` becomes `F rho L / V`.
    /// Idempotent on an already dimensionless scenario.
    pub fn nondimensionalize(&self) -> Scenario {
        if self.units == Units::Dimensionless {
            return self.clone();
        }
        let sc = self.scales;
        self.transformed(
            1.0 / sc.length,
            1.0 / sc.density,
            1.0 / sc.time(),
            sc.density * sc.length / sc.speed,
            1.0 / (sc.mass() / sc.time()),
            Units::Dimensionless,
        )
    }

    /// Inverse of [`Scenario::nondimensionalize`].
    pub fn redimensionalize(&self) -> Scenario {
        if self.units == Units::Physical {
            return self.clone();
        }
        let sc = self.scales;
        self.transformed(
            sc.length,
            sc.density,
            sc.time(),
            sc.speed / (sc.density * sc.length),
            sc.mass() / sc.time(),
            Units::Physical,
        )
    }

    fn transformed(
        &self,
        length: f64,
        density: f64,
        time: f64,
        repulsion: f64,
        rate: f64,
        units: Units,
    ) -> Scenario {
        let seg = |s: &Segment| Segment {
            side: s.side,
            from: s.from * length,
            to: s.to * length,
        };
        Scenario {
            width: self.width * length,
            height: self.height * length,
            nx: self.nx,
            ny: self.ny,
            exits: self
                .exits
                .iter()
                .map(|e| Exit {
                    id: e.id.clone(),
                    segment: seg(&e.segment),
                })
                .collect(),
            entrances: self
                .entrances
                .iter()
                .map(|e| Entrance {
                    id: e.id.clone(),
                    segment: seg(&e.segment),
                    rate: e.rate * rate,
                    duration: e.duration * time,
                })
                .collect(),
            obstacles: self.obstacles.iter().map(|r| r.scaled(length)).collect(),
            rho0: self
                .rho0
                .iter()
                .map(|b| DensityBlock {
                    rect: b.rect.scaled(length),
                    density: b.density * density,
                })
                .collect(),
            alpha_deg: self.alpha_deg,
            sensory_radius: self.sensory_radius * length,
            repulsion: self.repulsion * repulsion,
            scales: self.scales,
            units,
        }
    }

    /// Converts a length in this scenario's units to the dimensionless one.
    pub fn length_to_dimensionless(&self) -> f64 {
        match self.units {
            Units::Physical => 1.0 / self.scales.length,
            Units::Dimensionless => 1.0,
        }
    }

    /// Time at which every entrance has stopped injecting.
    pub fn inflow_end(&self) -> f64 {
        self.entrances
            .iter()
            .filter(|e| e.rate > 0.0)
            .map(|e| e.duration)
            .fold(0.0, f64::max)
    }
}

/// The initial density of `s` on the walkable cells of `g`, summing
/// overlapping blocks.
pub fn initial_density(s: &Scenario, g: &CellGrid) -> DensityField {
    let (nx, ny) = (g.nx(), g.ny());
    let mut rho = DensityField::zeros(nx, ny, g.spacing());
    for j in 0..ny {
        for i in 0..nx {
            if !g.is_walkable(i, j) {
                continue;
            }
            let [x, y] = g.center(i, j);
            let d: f64 = s
                .rho0
                .iter()
                .filter(|b| b.rect.contains(x, y))
                .map(|b| b.density)
                .sum();
            rho.set(i, j, d);
        }
    }
    rho
}

/// Whether the controlled obstacle `lambda` may be added to `s`: it lies inside
/// the domain, misses the support of `rho0` and the fixed obstacles, and leaves
/// at least one free cell on every exit and entrance segment.
pub fn admissible(lambda: &ObstacleParam, s: &Scenario) -> bool {
    if !(lambda.w > 0.0 && lambda.h > 0.0) || !lambda.x.is_finite() || !lambda.y.is_finite() {
        return false;
    }
    let r = lambda.rect();
    if !r.within(s.width, s.height) {
        return false;
    }
    if s.rho0
        .iter()
        .any(|b| b.density > 0.0 && r.intersects(&b.rect))
    {
        return false;
    }
    if s.obstacles.iter().any(|o| r.intersects(o)) {
        return false;
    }
    let grid = classify_cells(s, Some(lambda));
    (0..s.exits.len()).all(|k| grid.exit_cell_count(k) > 0)
        && (0..s.entrances.len()).all(|k| grid.entrance_cells(k).next().is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn room(n: usize) -> Scenario {
        Scenario {
            width: 10.0,
            height: 10.0,
            nx: n,
            ny: n,
            exits: vec![Exit {
                id: "e1".into(),
                segment: Segment {
                    side: Side::Right,
                    from: 4.0,
                    to: 6.0,
                },
            }],
            entrances: vec![],
            obstacles: vec![],
            rho0: vec![],
            alpha_deg: 170.0,
            sensory_radius: 1.5,
            repulsion: 8.0,
            scales: CharacteristicScales::UNIT,
            units: Units::Physical,
        }
    }

    #[test]
    fn empty_room_is_valid() {
        room(20).validate().unwrap();
    }

    #[test]
    fn obstacle_outside_domain_is_rejected() {
        let mut s = room(20);
        s.obstacles.push(Rect::new(8.0, 8.0, 5.0, 1.0));
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("obstacle outside domain"), "{err}");
        assert!(err.to_string().contains("obstacles[0]"));
    }

    #[test]
    fn obstacle_on_initial_crowd_is_rejected() {
        let mut s = room(20);
        s.rho0.push(DensityBlock {
            rect: Rect::new(1.0, 1.0, 2.0, 2.0),
            density: 1.0,
        });
        s.obstacles.push(Rect::new(2.0, 2.0, 1.0, 1.0));
        assert!(s.validate().is_err());
    }

    #[test]
    fn overlapping_exits_are_rejected() {
        let mut s = room(20);
        s.exits.push(Exit {
            id: "e2".into(),
            segment: Segment {
                side: Side::Right,
                from: 5.0,
                to: 7.0,
            },
        });
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("e2"), "{err}");
    }

    #[test]
    fn non_square_cells_are_rejected() {
        let mut s = room(20);
        s.ny = 10;
        assert!(s.validate().is_err());
    }

    #[test]
    fn unit_scales_are_identity() {
        let s = room(20);
        let d = s.nondimensionalize();
        assert_eq!(d.units, Units::Dimensionless);
        assert_eq!(d.width, s.width);
        assert_eq!(d.repulsion, s.repulsion);
        assert_eq!(d.redimensionalize(), s);
    }

    #[test]
    fn repulsion_scaling() {
        let mut s = room(20);
        s.scales = CharacteristicScales {
            length: 50.0,
            speed: 1.0,
            density: 1.0,
        };
        let d = s.nondimensionalize();
        // F rho L / V = 8 * 1 * 50 / 1
        assert!((d.repulsion - 400.0).abs() < 1e-12);
        assert!((d.width - 0.2).abs() < 1e-15);
    }

    #[test]
    fn admissibility_rules() {
        let mut s = room(20);
        s.rho0.push(DensityBlock {
            rect: Rect::new(1.0, 1.0, 2.0, 2.0),
            density: 1.0,
        });
        assert!(!admissible(&ObstacleParam::new(2.0, 2.0, 1.0, 1.0), &s));
        assert!(admissible(&ObstacleParam::new(6.0, 6.0, 1.0, 1.0), &s));
        assert!(!admissible(&ObstacleParam::new(9.8, 5.0, 1.0, 1.0), &s));
        // Covers every exit cell of the single exit.
        assert!(!admissible(&ObstacleParam::new(9.5, 5.0, 1.0, 4.0), &s));
        // Covers part of the exit only.
        assert!(admissible(&ObstacleParam::new(9.5, 4.5, 1.0, 1.0), &s));
    }
}
