use ndarray::Array2;

use crate::domain::grid::Grid2D;
use crate::error::{Result, WdriError};

/// The inversion unknown: squared slowness m = 1/v^2 (s^2/m^2) on a 2-D grid.
#[derive(Debug, Clone)]
pub struct SlownessSquaredModel {
    grid: Grid2D,
    m: Array2<f64>,
}

impl SlownessSquaredModel {
    pub fn new(grid: Grid2D, m: Array2<f64>) -> Result<Self> {
        if m.dim() != (grid.nx, grid.nz) {
            return Err(WdriError::ShapeMismatch(format!(
                "model field is {:?}, grid is {}x{}",
                m.dim(),
                grid.nx,
                grid.nz
            )));
        }
        if m.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(WdriError::InvalidArgument(
                "slowness-squared field must be finite and strictly positive".into(),
            ));
        }
        Ok(SlownessSquaredModel { grid, m })
    }

    pub fn from_velocity(grid: Grid2D, v: &Array2<f64>) -> Result<Self> {
        let m = v.mapv(|vel| 1.0 / (vel * vel));
        Self::new(grid, m)
    }

    pub fn homogeneous(grid: Grid2D, velocity: f64) -> Result<Self> {
        if !(velocity > 0.0) {
            return Err(WdriError::InvalidArgument(format!(
                "velocity must be positive, got {velocity}"
            )));
        }
        let m = Array2::from_elem((grid.nx, grid.nz), 1.0 / (velocity * velocity));
        Self::new(grid, m)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn field(&self) -> &Array2<f64> {
        &self.m
    }

    /// Velocity view v = 1/sqrt(m).
    pub fn velocity(&self) -> Array2<f64> {
        self.m.mapv(|m| 1.0 / m.sqrt())
    }

    pub fn max_velocity(&self) -> f64 {
        // max v corresponds to min m
        let m_min = self.m.iter().cloned().fold(f64::INFINITY, f64::min);
        1.0 / m_min.sqrt()
    }

    pub fn min_velocity(&self) -> f64 {
        let m_max = self.m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        1.0 / m_max.sqrt()
    }

    /// Apply an additive update and clip the result to the velocity bounds.
    pub fn updated_clipped(&self, delta_m: &Array2<f64>, v_min: f64, v_max: f64) -> Result<Self> {
        if delta_m.dim() != self.m.dim() {
            return Err(WdriError::ShapeMismatch(
                "model update shape differs from model".into(),
            ));
        }
        let m_lo = 1.0 / (v_max * v_max);
        let m_hi = 1.0 / (v_min * v_min);
        let mut m = self.m.clone();
        m.zip_mut_with(delta_m, |m, &d| {
            *m = (*m + d).clamp(m_lo, m_hi);
        });
        Self::new(self.grid.clone(), m)
    }

    /// Root-mean-square velocity difference against another model on the same grid.
    pub fn velocity_rmse(&self, other: &SlownessSquaredModel) -> Result<f64> {
        if self.grid != other.grid {
            return Err(WdriError::ShapeMismatch(
                "models live on different grids".into(),
            ));
        }
        let va = self.velocity();
        let vb = other.velocity();
        let n = va.len() as f64;
        let sum: f64 = va
            .iter()
            .zip(vb.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((sum / n).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_round_trip() {
        let grid = Grid2D::new(5, 5, 10.0, 10.0).unwrap();
        let v = Array2::from_shape_fn((5, 5), |(i, j)| 1500.0 + 13.7 * (i * 5 + j) as f64);
        let model = SlownessSquaredModel::from_velocity(grid, &v).unwrap();
        let back = model.velocity();
        for (a, b) in v.iter().zip(back.iter()) {
            assert!((a - b).abs() / a < 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive() {
        let grid = Grid2D::new(3, 3, 1.0, 1.0).unwrap();
        let mut m = Array2::from_elem((3, 3), 1e-7);
        m[(1, 1)] = 0.0;
        assert!(SlownessSquaredModel::new(grid, m).is_err());
    }

    #[test]
    fn clipping_respects_bounds() {
        let grid = Grid2D::new(3, 3, 1.0, 1.0).unwrap();
        let model = SlownessSquaredModel::homogeneous(grid, 2000.0).unwrap();
        let delta = Array2::from_elem((3, 3), 1.0); // huge slowness increase
        let updated = model.updated_clipped(&delta, 1000.0, 3000.0).unwrap();
        assert!((updated.min_velocity() - 1000.0).abs() < 1e-9);
    }
}
