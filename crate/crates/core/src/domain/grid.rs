use crate::error::{Result, WdriError};

/// Regular 2-D spatial grid. `x` is the horizontal axis (index `i`),
/// `z` the vertical axis (index `j`, increasing downward).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub nz: usize,
    pub dx: f64,
    pub dz: f64,
    pub origin: (f64, f64),
}

impl Grid2D {
    pub fn new(nx: usize, nz: usize, dx: f64, dz: f64) -> Result<Self> {
        Self::with_origin(nx, nz, dx, dz, (0.0, 0.0))
    }

    pub fn with_origin(nx: usize, nz: usize, dx: f64, dz: f64, origin: (f64, f64)) -> Result<Self> {
        if nx < 3 || nz < 3 {
            return Err(WdriError::InvalidArgument(format!(
                "grid must be at least 3x3, got {nx}x{nz}"
            )));
        }
        if !(dx > 0.0) || !(dz > 0.0) {
            return Err(WdriError::InvalidArgument(format!(
                "grid spacing must be positive, got dx={dx}, dz={dz}"
            )));
        }
        Ok(Grid2D {
            nx,
            nz,
            dx,
            dz,
            origin,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.nz
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin.0 + i as f64 * self.dx
    }

    pub fn z(&self, j: usize) -> f64 {
        self.origin.1 + j as f64 * self.dz
    }

    pub fn extent_x(&self) -> f64 {
        (self.nx - 1) as f64 * self.dx
    }

    pub fn extent_z(&self) -> f64 {
        (self.nz - 1) as f64 * self.dz
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        let eps_x = 1e-9 * self.dx;
        let eps_z = 1e-9 * self.dz;
        x >= self.origin.0 - eps_x
            && x <= self.origin.0 + self.extent_x() + eps_x
            && z >= self.origin.1 - eps_z
            && z <= self.origin.1 + self.extent_z() + eps_z
    }

    /// Snap a physical position to the nearest grid node.
    pub fn nearest_index(&self, x: f64, z: f64) -> Result<(usize, usize)> {
        if !self.contains(x, z) {
            return Err(WdriError::InvalidArgument(format!(
                "position ({x}, {z}) lies outside the grid"
            )));
        }
        let i = ((x - self.origin.0) / self.dx).round() as isize;
        let j = ((z - self.origin.1) / self.dz).round() as isize;
        let i = i.clamp(0, self.nx as isize - 1) as usize;
        let j = j.clamp(0, self.nz as isize - 1) as usize;
        Ok((i, j))
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dz
    }
}
