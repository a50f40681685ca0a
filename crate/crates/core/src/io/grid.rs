//! Grid file format ("WDG1"): a UTF-8 text header of `key=value` lines
//! terminated by `end_header`, followed by raw little-endian 32-bit floats
//! in z-fastest order.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::domain::Grid2D;
use crate::error::{Result, WdriError};

use super::header::{format_f64, HeaderReader};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Velocity,
    SlownessSquared,
    Generic,
}

impl GridKind {
    fn tag(self) -> &'static str {
        match self {
            GridKind::Velocity => "velocity",
            GridKind::SlownessSquared => "slowness-squared",
            GridKind::Generic => "generic",
        }
    }

    fn from_tag(s: &str) -> Option<GridKind> {
        match s {
            "velocity" => Some(GridKind::Velocity),
            "slowness-squared" => Some(GridKind::SlownessSquared),
            "generic" => Some(GridKind::Generic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridFile {
    pub grid: Grid2D,
    pub kind: GridKind,
    pub values: Array2<f64>,
}

pub const GRID_MAGIC: &str = "WDG1";

pub fn write_grid(
    path: impl AsRef<Path>,
    grid: &Grid2D,
    kind: GridKind,
    values: &Array2<f64>,
) -> Result<()> {
    let path = path.as_ref();
    if values.dim() != (grid.nx, grid.nz) {
        return Err(WdriError::ShapeMismatch(format!(
            "field is {:?}, grid is ({}, {})",
            values.dim(),
            grid.nx,
            grid.nz
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(WdriError::InvalidArgument(
            "refusing to write non-finite field".into(),
        ));
    }
    let file = std::fs::File::create(path).map_err(|e| WdriError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| WdriError::io(path, e);
    writeln!(w, "{GRID_MAGIC}").map_err(io_err)?;
    writeln!(w, "nx={}", grid.nx).map_err(io_err)?;
    writeln!(w, "nz={}", grid.nz).map_err(io_err)?;
    writeln!(w, "dx={}", format_f64(grid.dx)).map_err(io_err)?;
    writeln!(w, "dz={}", format_f64(grid.dz)).map_err(io_err)?;
    writeln!(w, "origin_x={}", format_f64(grid.origin.0)).map_err(io_err)?;
    writeln!(w, "origin_z={}", format_f64(grid.origin.1)).map_err(io_err)?;
    writeln!(w, "kind={}", kind.tag()).map_err(io_err)?;
    writeln!(w, "end_header").map_err(io_err)?;
    for i in 0..grid.nx {
        for j in 0..grid.nz {
            w.write_all(&(values[(i, j)] as f32).to_le_bytes())
                .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<GridFile> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| WdriError::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| WdriError::io(path, e))?;
    let mut h = HeaderReader::new(path, &bytes, GRID_MAGIC)?;
    let nx: usize = h.required("nx")?;
    let nz: usize = h.required("nz")?;
    let dx: f64 = h.required("dx")?;
    let dz: f64 = h.required("dz")?;
    let ox: f64 = h.optional("origin_x")?.unwrap_or(0.0);
    let oz: f64 = h.optional("origin_z")?.unwrap_or(0.0);
    let kind_tag: String = h.required("kind")?;
    let kind = GridKind::from_tag(&kind_tag)
        .ok_or_else(|| h.error(format!("unknown grid kind {kind_tag:?}")))?;
    let offset = h.finish()?;
    let grid = Grid2D::with_origin(nx, nz, dx, dz, (ox, oz))?;
    let payload = &bytes[offset..];
    let expected = nx * nz * 4;
    if payload.len() != expected {
        return Err(WdriError::Format {
            path: path.to_path_buf(),
            message: format!(
                "payload is {} bytes, expected {expected} ({nx} x {nz} float32)",
                payload.len()
            ),
            offset: offset as u64,
        });
    }
    let mut values = Array2::<f64>::zeros((nx, nz));
    for i in 0..nx {
        for j in 0..nz {
            let k = (i * nz + j) * 4;
            let v = f32::from_le_bytes(payload[k..k + 4].try_into().unwrap());
            values[(i, j)] = v as f64;
        }
    }
    Ok(GridFile { grid, kind, values })
}
