//! Cell-centered fields on an `nx x ny` grid, row-major with `idx = j * nx + i`.

/// Scalar crowd density per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    nx: usize,
    ny: usize,
    h: f64,
    data: Vec<f64>,
}

impl DensityField {
    pub fn zeros(nx: usize, ny: usize, h: f64) -> Self {
        Self {
            nx,
            ny,
            h,
            data: vec![0.0; nx * ny],
        }
    }

    pub fn from_vec(nx: usize, ny: usize, h: f64, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nx * ny, "density buffer does not match grid");
        Self { nx, ny, h, data }
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

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[j * self.nx + i] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Total mass `N_P = sum(rho) h^2`.
    pub fn mass(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.h * self.h
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `sum |a - b| h^2`.
    pub fn l1_distance(&self, other: &DensityField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.h
            * self.h
    }

    /// In-place `self = (1 - w) self + w other`.
    pub fn blend(&mut self, other: &DensityField, w: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = (1.0 - w) * *a + w * b;
        }
    }
}

/// Two-component velocity per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    nx: usize,
    ny: usize,
    data: Vec<[f64; 2]>,
}

impl VelocityField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            data: vec![[0.0; 2]; nx * ny],
        }
    }

    pub fn uniform(nx: usize, ny: usize, v: [f64; 2]) -> Self {
        Self {
            nx,
            ny,
            data: vec![v; nx * ny],
        }
    }

    pub fn from_vec(nx: usize, ny: usize, data: Vec<[f64; 2]>) -> Self {
        assert_eq!(data.len(), nx * ny, "velocity buffer does not match grid");
        Self { nx, ny, data }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> [f64; 2] {
        self.data[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: [f64; 2]) {
        self.data[j * self.nx + i] = v;
    }

    pub fn as_slice(&self) -> &[[f64; 2]] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [[f64; 2]] {
        &mut self.data
    }

    /// Componentwise sum of two fields on the same grid.
    pub fn add(&self, other: &VelocityField) -> VelocityField {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
            .collect();
        VelocityField {
            nx: self.nx,
            ny: self.ny,
            data,
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            v[0] *= c;
            v[1] *= c;
        }
    }

    /// True when every component is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v[0] == 0.0 && v[1] == 0.0)
    }

    /// `max(|v_x| + |v_y|)` over all cells.
    pub fn max_l1_speed(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v[0].abs() + v[1].abs())
            .fold(0.0, f64::max)
    }
}
