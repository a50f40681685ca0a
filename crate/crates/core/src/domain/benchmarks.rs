use ndarray::Array2;

use crate::domain::grid::Grid2D;
use crate::domain::model::SlownessSquaredModel;
use crate::error::{Result, WdriError};

/// Circular-anomaly benchmark: a disk of `anomaly_velocity` in a homogeneous
/// background.
#[derive(Debug, Clone)]
pub struct CamembertSpec {
    pub extent_x: f64,
    pub extent_z: f64,
    pub dx: f64,
    pub dz: f64,
    pub background_velocity: f64,
    pub anomaly_velocity: f64,
    /// Anomaly center; `None` places it at the domain center.
    pub center: Option<(f64, f64)>,
    pub radius: f64,
}

impl Default for CamembertSpec {
    fn default() -> Self {
        CamembertSpec {
            extent_x: 4800.0,
            extent_z: 6000.0,
            dx: 35.5,
            dz: 35.5,
            background_velocity: 4000.0,
            anomaly_velocity: 4600.0,
            center: None,
            radius: 1200.0,
        }
    }
}

/// Snap record for builders whose requested extent does not land on an
/// integer number of grid cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSnap {
    pub requested_extent: (f64, f64),
    pub actual_extent: (f64, f64),
}

pub fn build_camembert(spec: &CamembertSpec) -> Result<(SlownessSquaredModel, GridSnap)> {
    if !(spec.radius >= 0.0) {
        return Err(WdriError::InvalidArgument(
            "radius must be non-negative".into(),
        ));
    }
    // Snap to the nearest integer grid; the requested extent may not divide
    // evenly by the spacing (the default 4.8 km / 35.5 m does not).
    let nx = (spec.extent_x / spec.dx).round() as usize + 1;
    let nz = (spec.extent_z / spec.dz).round() as usize + 1;
    let grid = Grid2D::new(nx, nz, spec.dx, spec.dz)?;
    let snap = GridSnap {
        requested_extent: (spec.extent_x, spec.extent_z),
        actual_extent: (grid.extent_x(), grid.extent_z()),
    };
    let (cx, cz) = spec
        .center
        .unwrap_or((0.5 * grid.extent_x(), 0.5 * grid.extent_z()));
    if spec.radius > 0.0
        && (cx - spec.radius < 0.0
            || cx + spec.radius > grid.extent_x()
            || cz - spec.radius < 0.0
            || cz + spec.radius > grid.extent_z())
    {
        return Err(WdriError::InvalidArgument(format!(
            "anomaly circle (center ({cx}, {cz}), radius {}) extends outside the grid",
            spec.radius
        )));
    }
    let v = Array2::from_shape_fn((nx, nz), |(i, j)| {
        let x = grid.x(i);
        let z = grid.z(j);
        let r2 = (x - cx) * (x - cx) + (z - cz) * (z - cz);
        if r2 <= spec.radius * spec.radius {
            spec.anomaly_velocity
        } else {
            spec.background_velocity
        }
    });
    Ok((SlownessSquaredModel::from_velocity(grid, &v)?, snap))
}

/// Checkerboard benchmark: alternating square tiles of `tile_velocity` over a
/// homogeneous background.
#[derive(Debug, Clone)]
pub struct CheckerboardSpec {
    pub nx: usize,
    pub nz: usize,
    pub dx: f64,
    pub dz: f64,
    pub background_velocity: f64,
    pub tile_velocity: f64,
    pub tile_size: f64,
}

impl Default for CheckerboardSpec {
    fn default() -> Self {
        CheckerboardSpec {
            nx: 101,
            nz: 101,
            dx: 20.0,
            dz: 20.0,
            background_velocity: 1500.0,
            tile_velocity: 4000.0,
            tile_size: 200.0,
        }
    }
}

impl CheckerboardSpec {
    /// Tile parity at a grid node; `true` marks a perturbed tile.
    pub fn is_perturbed(&self, i: usize, j: usize) -> bool {
        let ti = ((i as f64 * self.dx) / self.tile_size).floor() as i64;
        let tj = ((j as f64 * self.dz) / self.tile_size).floor() as i64;
        (ti + tj) % 2 == 1
    }
}

pub fn build_checkerboard(spec: &CheckerboardSpec) -> Result<SlownessSquaredModel> {
    let grid = Grid2D::new(spec.nx, spec.nz, spec.dx, spec.dz)?;
    let aligned = |size: f64, step: f64| {
        let ratio = size / step;
        (ratio - ratio.round()).abs() < 1e-9 && ratio.round() >= 1.0
    };
    if !aligned(spec.tile_size, spec.dx) || !aligned(spec.tile_size, spec.dz) {
        return Err(WdriError::InvalidArgument(format!(
            "tile size {} m is not a multiple of the grid spacing ({}, {})",
            spec.tile_size, spec.dx, spec.dz
        )));
    }
    let v = Array2::from_shape_fn((spec.nx, spec.nz), |(i, j)| {
        if spec.is_perturbed(i, j) {
            spec.tile_velocity
        } else {
            spec.background_velocity
        }
    });
    SlownessSquaredModel::from_velocity(grid, &v)
}

/// Largest stable time step for the 2nd-order 5-point stencil:
/// 0.9 * min(dx, dz) / (v_max * sqrt(2)).
pub fn cfl_max_dt(model: &SlownessSquaredModel) -> f64 {
    let grid = model.grid();
    0.9 * grid.dx.min(grid.dz) / (model.max_velocity() * std::f64::consts::SQRT_2)
}
