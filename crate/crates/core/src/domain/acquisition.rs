use ndarray::Array2;

use crate::domain::grid::Grid2D;
use crate::domain::time::TimeAxis;
use crate::error::{Result, WdriError};

/// Physical position (x, z) in meters.
pub type Position = (f64, f64);

/// Source and receiver layout. The receiver index map realizes the sampling
/// operator P as a pure selection of grid nodes.
#[derive(Debug, Clone)]
pub struct Acquisition {
    sources: Vec<Position>,
    receivers: Vec<Position>,
    source_indices: Vec<(usize, usize)>,
    receiver_indices: Vec<(usize, usize)>,
}

impl Acquisition {
    pub fn new(grid: &Grid2D, sources: Vec<Position>, receivers: Vec<Position>) -> Result<Self> {
        if sources.is_empty() || receivers.is_empty() {
            return Err(WdriError::InvalidArgument(
                "acquisition needs at least one source and one receiver".into(),
            ));
        }
        let source_indices = sources
            .iter()
            .map(|&(x, z)| grid.nearest_index(x, z))
            .collect::<Result<Vec<_>>>()?;
        let receiver_indices = receivers
            .iter()
            .map(|&(x, z)| grid.nearest_index(x, z))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = std::collections::HashSet::new();
        for &idx in &receiver_indices {
            if !seen.insert(idx) {
                return Err(WdriError::InvalidArgument(format!(
                    "two receivers snap to the same grid node {idx:?}"
                )));
            }
        }
        Ok(Acquisition {
            sources,
            receivers,
            source_indices,
            receiver_indices,
        })
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn sources(&self) -> &[Position] {
        &self.sources
    }

    pub fn receivers(&self) -> &[Position] {
        &self.receivers
    }

    pub fn source_index(&self, shot: usize) -> (usize, usize) {
        self.source_indices[shot]
    }

    pub fn receiver_indices(&self) -> &[(usize, usize)] {
        &self.receiver_indices
    }
}

/// Receiver-sampled data for one shot: an nt x nr trace matrix.
#[derive(Debug, Clone)]
pub struct ShotGather {
    pub shot_id: usize,
    pub time: TimeAxis,
    pub traces: Array2<f64>,
}

impl ShotGather {
    pub fn new(shot_id: usize, time: TimeAxis, traces: Array2<f64>) -> Result<Self> {
        if traces.nrows() != time.nt {
            return Err(WdriError::ShapeMismatch(format!(
                "gather has {} time rows but the axis has {} samples",
                traces.nrows(),
                time.nt
            )));
        }
        Ok(ShotGather {
            shot_id,
            time,
            traces,
        })
    }

    pub fn zeros(shot_id: usize, time: TimeAxis, nr: usize) -> Self {
        ShotGather {
            shot_id,
            time,
            traces: Array2::zeros((time.nt, nr)),
        }
    }

    pub fn nr(&self) -> usize {
        self.traces.ncols()
    }

    pub fn norm_squared(&self) -> f64 {
        self.traces.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &ShotGather) -> Result<f64> {
        if self.traces.dim() != other.traces.dim() {
            return Err(WdriError::ShapeMismatch(
                "gathers have different shapes".into(),
            ));
        }
        Ok(self
            .traces
            .iter()
            .zip(other.traces.iter())
            .map(|(a, b)| a * b)
            .sum())
    }

    /// self - other, elementwise.
    pub fn sub(&self, other: &ShotGather) -> Result<ShotGather> {
        if self.traces.dim() != other.traces.dim() {
            return Err(WdriError::ShapeMismatch(
                "gathers have different shapes".into(),
            ));
        }
        Ok(ShotGather {
            shot_id: self.shot_id,
            time: self.time,
            traces: &self.traces - &other.traces,
        })
    }
}

/// Evenly spread `n` positions along the segment from `a` to `b` (inclusive).
pub fn line_positions(a: Position, b: Position, n: usize) -> Vec<Position> {
    if n == 1 {
        return vec![(0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1))];
    }
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
        })
        .collect()
}

/// `n` positions spread uniformly along the rectangle perimeter inset by
/// `margin` from the grid edges.
pub fn perimeter_positions(grid: &Grid2D, margin: f64, n: usize) -> Vec<Position> {
    let x0 = grid.origin.0 + margin;
    let z0 = grid.origin.1 + margin;
    let x1 = grid.origin.0 + grid.extent_x() - margin;
    let z1 = grid.origin.1 + grid.extent_z() - margin;
    let w = x1 - x0;
    let h = z1 - z0;
    let perim = 2.0 * (w + h);
    (0..n)
        .map(|k| {
            let mut s = perim * k as f64 / n as f64;
            if s < w {
                return (x0 + s, z0);
            }
            s -= w;
            if s < h {
                return (x1, z0 + s);
            }
            s -= h;
            if s < w {
                return (x1 - s, z1);
            }
            s -= w;
            (x0, z1 - s)
        })
        .collect()
}
