//! Deterministic on-disk formats: model grids, shot gathers, misfit logs,
//! and run configuration files.

mod config;
mod gather;
mod grid;
mod header;
mod log;

pub use config::{
    parse_camembert_spec, parse_checkerboard_spec, parse_config, GeometrySpec, RunConfig,
    WaveletConfig, WaveletKind,
};
pub use gather::{read_gather, write_gather, GATHER_MAGIC};
pub use grid::{read_grid, write_grid, GridFile, GridKind, GRID_MAGIC};
pub use log::{append_misfit_log, read_misfit_log, MisfitLogRecord};

use std::path::PathBuf;

/// Default artifact directory: `$WDRI_DATA_DIR` if set, else the current
/// directory.
pub fn data_dir() -> PathBuf {
    std::env::var_os("WDRI_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Deterministic per-shot gather file name, `shot_0000.wds`.
pub fn shot_file_name(shot_id: usize) -> String {
    format!("shot_{shot_id:04}.wds")
}
