use ndarray::{Array2, Array3};

use crate::domain::{Grid2D, TimeAxis};
use crate::error::{Result, WdriError};

/// A full space-time field u(t, x, z) on the physical grid.
#[derive(Debug, Clone)]
pub struct WavefieldMovie {
    pub grid: Grid2D,
    pub time: TimeAxis,
    /// frames indexed (t, x, z)
    pub frames: Array3<f64>,
}

impl WavefieldMovie {
    pub fn zeros(grid: Grid2D, time: TimeAxis) -> Self {
        let frames = Array3::zeros((time.nt, grid.nx, grid.nz));
        WavefieldMovie { grid, time, frames }
    }

    pub fn new(grid: Grid2D, time: TimeAxis, frames: Array3<f64>) -> Result<Self> {
        if frames.dim() != (time.nt, grid.nx, grid.nz) {
            return Err(WdriError::ShapeMismatch(format!(
                "movie frames are {:?}, expected ({}, {}, {})",
                frames.dim(),
                time.nt,
                grid.nx,
                grid.nz
            )));
        }
        Ok(WavefieldMovie { grid, time, frames })
    }

    fn same_shape(&self, other: &WavefieldMovie) -> bool {
        self.frames.dim() == other.frames.dim()
    }
}

/// A full space-time right-hand side b(t, x, z). Lives on the physical grid,
/// which keeps it zero inside the absorbing layers by construction.
pub type VolumetricSource = WavefieldMovie;

/// Central-difference second time derivative; first and last frames are zero.
pub fn second_time_derivative(movie: &WavefieldMovie) -> Result<WavefieldMovie> {
    let nt = movie.time.nt;
    if nt < 3 {
        return Err(WdriError::InvalidArgument(
            "second time derivative needs at least 3 frames".into(),
        ));
    }
    let inv_dt2 = 1.0 / (movie.time.dt * movie.time.dt);
    let mut out = Array3::zeros(movie.frames.dim());
    for n in 1..nt - 1 {
        let prev = movie.frames.index_axis(ndarray::Axis(0), n - 1);
        let cur = movie.frames.index_axis(ndarray::Axis(0), n);
        let next = movie.frames.index_axis(ndarray::Axis(0), n + 1);
        let mut dst = out.index_axis_mut(ndarray::Axis(0), n);
        ndarray::Zip::from(&mut dst)
            .and(&prev)
            .and(&cur)
            .and(&next)
            .for_each(|o, &p, &c, &nx| *o = (nx - 2.0 * c + p) * inv_dt2);
    }
    WavefieldMovie::new(movie.grid.clone(), movie.time, out)
}

/// Per-cell zero-lag cross-correlation: sum_t a(t) * b(t) * dt.
pub fn zero_lag_correlate(a: &WavefieldMovie, b: &WavefieldMovie) -> Result<Array2<f64>> {
    if !a.same_shape(b) {
        return Err(WdriError::ShapeMismatch(
            "movies have different shapes".into(),
        ));
    }
    let dt = a.time.dt;
    let mut out = Array2::zeros((a.grid.nx, a.grid.nz));
    for n in 0..a.time.nt {
        let fa = a.frames.index_axis(ndarray::Axis(0), n);
        let fb = b.frames.index_axis(ndarray::Axis(0), n);
        ndarray::Zip::from(&mut out)
            .and(&fa)
            .and(&fb)
            .for_each(|o, &x, &y| *o += x * y * dt);
    }
    Ok(out)
}

/// Per-cell energy: sum_t |a(t)|^2 * dt. Equals zero_lag_correlate(a, a).
pub fn illumination(a: &WavefieldMovie) -> Array2<f64> {
    zero_lag_correlate(a, a).expect("self-correlation cannot mismatch")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn movie_from_fn(
        nt: usize,
        nx: usize,
        nz: usize,
        dt: f64,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> WavefieldMovie {
        let grid = Grid2D::new(nx, nz, 1.0, 1.0).unwrap();
        let time = TimeAxis::new(nt, dt).unwrap();
        let frames = Array3::from_shape_fn((nt, nx, nz), |(n, i, j)| f(n, i, j));
        WavefieldMovie::new(grid, time, frames).unwrap()
    }

    #[test]
    fn second_derivative_of_quadratic_is_two() {
        let m = movie_from_fn(8, 3, 3, 1.0, |n, _, _| (n * n) as f64);
        let d2 = second_time_derivative(&m).unwrap();
        for n in 1..7 {
            assert!((d2.frames[(n, 1, 1)] - 2.0).abs() < 1e-12);
        }
        assert_eq!(d2.frames[(0, 1, 1)], 0.0);
        assert_eq!(d2.frames[(7, 1, 1)], 0.0);
    }

    #[test]
    fn second_derivative_of_linear_is_zero() {
        let m = movie_from_fn(8, 3, 3, 0.5, |n, _, _| 3.0 * n as f64 + 1.0);
        let d2 = second_time_derivative(&m).unwrap();
        for n in 1..7 {
            assert!(d2.frames[(n, 1, 1)].abs() < 1e-10);
        }
    }

    #[test]
    fn second_derivative_of_sinusoid() {
        let dt = 1e-3;
        let f = 20.0;
        let omega = 2.0 * std::f64::consts::PI * f;
        let m = movie_from_fn(64, 3, 3, dt, |n, _, _| (omega * n as f64 * dt).sin());
        let d2 = second_time_derivative(&m).unwrap();
        let tol = (omega * dt).powi(2); // O((w dt)^2) relative
        for n in 5..60 {
            let expect = -omega * omega * m.frames[(n, 1, 1)];
            if expect.abs() > 1.0 {
                let rel = (d2.frames[(n, 1, 1)] - expect).abs() / expect.abs();
                assert!(rel < 2.0 * tol, "rel {rel} at n={n}");
            }
        }
    }

    #[test]
    fn correlate_impulse() {
        let dt = 0.25;
        let m = movie_from_fn(4, 3, 3, dt, |n, i, j| {
            if n == 2 && i == 1 && j == 2 {
                1.0
            } else {
                0.0
            }
        });
        let c = zero_lag_correlate(&m, &m).unwrap();
        assert_eq!(c[(1, 2)], dt);
        assert_eq!(c[(0, 0)], 0.0);
    }

    #[test]
    fn correlate_matches_naive_and_commutes() {
        let a = movie_from_fn(6, 4, 5, 0.3, |n, i, j| {
            ((n * 31 + i * 7 + j * 3) % 11) as f64 - 5.0
        });
        let b = movie_from_fn(6, 4, 5, 0.3, |n, i, j| {
            ((n * 17 + i * 5 + j * 13) % 7) as f64 - 3.0
        });
        let ab = zero_lag_correlate(&a, &b).unwrap();
        let ba = zero_lag_correlate(&b, &a).unwrap();
        for i in 0..4 {
            for j in 0..5 {
                let mut naive = 0.0;
                for n in 0..6 {
                    naive += a.frames[(n, i, j)] * b.frames[(n, i, j)] * 0.3;
                }
                assert!((ab[(i, j)] - naive).abs() < 1e-12);
                assert_eq!(ab[(i, j)], ba[(i, j)]);
            }
        }
        let illum = illumination(&a);
        let aa = zero_lag_correlate(&a, &a).unwrap();
        assert_eq!(illum, aa);
        assert!(illum.iter().all(|&v| v >= 0.0));
    }
}
