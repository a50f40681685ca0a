//! Core value types: grids, models, time axes, wavelets, acquisition layouts,
//! and synthetic benchmark model builders.

mod acquisition;
mod benchmarks;
mod grid;
mod model;
mod time;
mod wavelet;

pub use acquisition::{line_positions, perimeter_positions, Acquisition, Position, ShotGather};
pub use benchmarks::{
    build_camembert, build_checkerboard, cfl_max_dt, CamembertSpec, CheckerboardSpec, GridSnap,
};
pub use grid::Grid2D;
pub use model::SlownessSquaredModel;
pub use time::TimeAxis;
pub use wavelet::{bandpass_ricker, default_ricker_delay, ricker, wavelet_halfwidth, Wavelet};
