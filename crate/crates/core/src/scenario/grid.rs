use super::{ObstacleParam, Scenario, Segment, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellClass {
    Free,
    Obstacle,
    /// Walkable cell on exit segment `k`.
    Exit(usize),
    /// Walkable cell on entrance segment `k`.
    Entrance(usize),
}

impl CellClass {
    #[inline]
    pub fn is_walkable(self) -> bool {
        !matches!(self, CellClass::Obstacle)
    }
}

/// One of the four faces of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    East,
    West,
    North,
    South,
}

impl Face {
    pub const ALL: [Face; 4] = [Face::East, Face::West, Face::North, Face::South];

    #[inline]
    pub fn bit(self) -> u8 {
        match self {
            Face::East => 1,
            Face::West => 2,
            Face::North => 4,
            Face::South => 8,
        }
    }

    pub fn normal(self) -> [f64; 2] {
        match self {
            Face::East => [1.0, 0.0],
            Face::West => [-1.0, 0.0],
            Face::North => [0.0, 1.0],
            Face::South => [0.0, -1.0],
        }
    }

    fn of_side(side: Side) -> Face {
        match side {
            Side::Right => Face::East,
            Side::Left => Face::West,
            Side::Top => Face::North,
            Side::Bottom => Face::South,
        }
    }

    fn offset(self) -> (isize, isize) {
        match self {
            Face::East => (1, 0),
            Face::West => (-1, 0),
            Face::North => (0, 1),
            Face::South => (0, -1),
        }
    }
}

/// Rasterized scenario: a class per cell plus, for walkable cells, which faces
/// are walls (outer boundary or obstacle) and which open onto an exit.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    nx: usize,
    ny: usize,
    h: f64,
    class: Vec<CellClass>,
    walls: Vec<u8>,
    exit_faces: Vec<u8>,
    exit_normals: Vec<[f64; 2]>,
    n_exits: usize,
    n_entrances: usize,
}

impl CellGrid {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// Center of cell `(i, j)`.
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h]
    }

    #[inline]
    pub fn class(&self, i: usize, j: usize) -> CellClass {
        self.class[j * self.nx + i]
    }

    #[inline]
    pub fn class_at(&self, idx: usize) -> CellClass {
        self.class[idx]
    }

    #[inline]
    pub fn is_walkable(&self, i: usize, j: usize) -> bool {
        self.class(i, j).is_walkable()
    }

    /// Bitmask of faces closed to flow (see [`Face::bit`]).
    #[inline]
    pub fn walls(&self, idx: usize) -> u8 {
        self.walls[idx]
    }

    /// Bitmask of faces that open onto an exit.
    #[inline]
    pub fn exit_faces(&self, idx: usize) -> u8 {
        self.exit_faces[idx]
    }

    /// Outward normals of the wall faces of a cell; empty for interior cells.
    pub fn wall_normals(&self, idx: usize) -> impl Iterator<Item = [f64; 2]> + '_ {
        let w = self.walls[idx];
        Face::ALL
            .into_iter()
            .filter(move |f| w & f.bit() != 0)
            .map(Face::normal)
    }

    /// Direction pointing through the exit for an exit cell.
    pub fn exit_normal(&self, idx: usize) -> Option<[f64; 2]> {
        match self.class[idx] {
            CellClass::Exit(_) => Some(self.exit_normals[idx]),
            _ => None,
        }
    }

    pub fn n_exits(&self) -> usize {
        self.n_exits
    }

    pub fn n_entrances(&self) -> usize {
        self.n_entrances
    }

    pub fn exit_cell_count(&self, k: usize) -> usize {
        self.class
            .iter()
            .filter(|c| **c == CellClass::Exit(k))
            .count()
    }

    pub fn entrance_cells(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.class
            .iter()
            .enumerate()
            .filter(move |(_, c)| **c == CellClass::Entrance(k))
            .map(|(idx, _)| idx)
    }

    pub fn obstacle_count(&self) -> usize {
        self.class
            .iter()
            .filter(|c| **c == CellClass::Obstacle)
            .count()
    }

    /// Boundary cells of `side` that a segment maps to: those whose center
    /// projects into `[from, to]`, or the single nearest cell when the segment
    /// is narrower than a cell.
    fn segment_cells(&self, seg: &Segment) -> Vec<(usize, usize)> {
        let (n_along, fixed) = match seg.side {
            Side::Left => (self.ny, 0),
            Side::Right => (self.ny, self.nx - 1),
            Side::Bottom => (self.nx, 0),
            Side::Top => (self.nx, self.ny - 1),
        };
        let to_cell = |k: usize| match seg.side {
            Side::Left | Side::Right => (fixed, k),
            Side::Top | Side::Bottom => (k, fixed),
        };
        let eps = 1e-9 * self.h;
        let mut cells: Vec<(usize, usize)> = (0..n_along)
            .filter(|&k| {
                let c = (k as f64 + 0.5) * self.h;
                c >= seg.from - eps && c <= seg.to + eps
            })
            .map(to_cell)
            .collect();
        if cells.is_empty() {
            let mid = 0.5 * (seg.from + seg.to);
            let k = ((mid / self.h).floor() as usize).min(n_along - 1);
            cells.push(to_cell(k));
        }
        cells
    }
}

/// Rasterizes a scenario, optionally with a controlled obstacle. A cell is an
/// obstacle iff its center lies in a fixed or controlled obstacle rectangle.
/// Exit and entrance cells are the walkable boundary cells on their segments.
///
/// `lambda` must be in the same length units as `s`.
pub fn classify_cells(s: &Scenario, lambda: Option<&ObstacleParam>) -> CellGrid {
    let (nx, ny) = (s.nx, s.ny);
    let h = s.spacing();
    let controlled = lambda.map(ObstacleParam::rect);
    let mut class = vec![CellClass::Free; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let (cx, cy) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            let blocked = s.obstacles.iter().any(|r| r.contains(cx, cy))
                || controlled.is_some_and(|r| r.contains(cx, cy));
            if blocked {
                class[j * nx + i] = CellClass::Obstacle;
            }
        }
    }

    let mut grid = CellGrid {
        nx,
        ny,
        h,
        class,
        walls: vec![0; nx * ny],
        exit_faces: vec![0; nx * ny],
        exit_normals: vec![[0.0; 2]; nx * ny],
        n_exits: s.exits.len(),
        n_entrances: s.entrances.len(),
    };

    for (k, exit) in s.exits.iter().enumerate() {
        let face = Face::of_side(exit.segment.side);
        for (i, j) in grid.segment_cells(&exit.segment) {
            let idx = grid.idx(i, j);
            if grid.class[idx] == CellClass::Free {
                grid.class[idx] = CellClass::Exit(k);
                grid.exit_faces[idx] |= face.bit();
                grid.exit_normals[idx] = exit.segment.side.normal();
            }
        }
    }
    for (k, ent) in s.entrances.iter().enumerate() {
        for (i, j) in grid.segment_cells(&ent.segment) {
            let idx = grid.idx(i, j);
            if grid.class[idx] == CellClass::Free {
                grid.class[idx] = CellClass::Entrance(k);
            }
        }
    }

    for j in 0..ny {
        for i in 0..nx {
            let idx = grid.idx(i, j);
            if !grid.class[idx].is_walkable() {
                continue;
            }
            let mut walls = 0u8;
            for face in Face::ALL {
                let (di, dj) = face.offset();
                let (ni, nj) = (i as isize + di, j as isize + dj);
                let outside = ni < 0 || nj < 0 || ni >= nx as isize || nj >= ny as isize;
                let closed = if outside {
                    grid.exit_faces[idx] & face.bit() == 0
                } else {
                    !grid.class[nj as usize * nx + ni as usize].is_walkable()
                };
                if closed {
                    walls |= face.bit();
                }
            }
            grid.walls[idx] = walls;
        }
    }
    grid
}
