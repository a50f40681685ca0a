//! Shot-gather file format ("WDS1"): text header (shot id, time axis,
//! receiver coordinates) followed by little-endian 32-bit floats in
//! receiver-fastest order (index `t * nr + r`).

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::domain::{Position, ShotGather, TimeAxis};
use crate::error::{Result, WdriError};

use super::header::{format_f64, HeaderReader};

pub const GATHER_MAGIC: &str = "WDS1";

pub fn write_gather(
    path: impl AsRef<Path>,
    gather: &ShotGather,
    receivers: &[Position],
) -> Result<()> {
    let path = path.as_ref();
    if receivers.len() != gather.nr() {
        return Err(WdriError::ShapeMismatch(format!(
            "{} receiver positions for a gather with {} traces",
            receivers.len(),
            gather.nr()
        )));
    }
    if gather.traces.iter().any(|v| !v.is_finite()) {
        return Err(WdriError::InvalidArgument(
            "refusing to write non-finite traces".into(),
        ));
    }
    let file = std::fs::File::create(path).map_err(|e| WdriError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| WdriError::io(path, e);
    writeln!(w, "{GATHER_MAGIC}").map_err(io_err)?;
    writeln!(w, "shot_id={}", gather.shot_id).map_err(io_err)?;
    writeln!(w, "nt={}", gather.time.nt).map_err(io_err)?;
    writeln!(w, "nr={}", gather.nr()).map_err(io_err)?;
    writeln!(w, "dt={}", format_f64(gather.time.dt)).map_err(io_err)?;
    for (r, &(x, z)) in receivers.iter().enumerate() {
        writeln!(w, "receiver_{r}={},{}", format_f64(x), format_f64(z)).map_err(io_err)?;
    }
    writeln!(w, "end_header").map_err(io_err)?;
    for t in 0..gather.time.nt {
        for r in 0..gather.nr() {
            w.write_all(&(gather.traces[(t, r)] as f32).to_le_bytes())
                .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_gather(path: impl AsRef<Path>) -> Result<(ShotGather, Vec<Position>)> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| WdriError::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| WdriError::io(path, e))?;
    let mut h = HeaderReader::new(path, &bytes, GATHER_MAGIC)?;
    let shot_id: usize = h.required("shot_id")?;
    let nt: usize = h.required("nt")?;
    let nr: usize = h.required("nr")?;
    let dt: f64 = h.required("dt")?;
    let mut receivers = Vec::with_capacity(nr);
    for r in 0..nr {
        let raw: String = h.required(&format!("receiver_{r}"))?;
        let parsed = raw.split_once(',').and_then(|(x, z)| {
            Some((x.trim().parse::<f64>().ok()?, z.trim().parse::<f64>().ok()?))
        });
        match parsed {
            Some(p) => receivers.push(p),
            None => return Err(h.error(format!("bad receiver position {raw:?}"))),
        }
    }
    let offset = h.finish()?;
    let time = TimeAxis::new(nt, dt)?;
    let payload = &bytes[offset..];
    let expected = nt * nr * 4;
    if payload.len() != expected {
        return Err(WdriError::Format {
            path: path.to_path_buf(),
            message: format!(
                "trace block is {} bytes, expected {expected} ({nt} x {nr} float32)",
                payload.len()
            ),
            offset: offset as u64,
        });
    }
    let mut traces = Array2::<f64>::zeros((nt, nr));
    for t in 0..nt {
        for r in 0..nr {
            let k = (t * nr + r) * 4;
            traces[(t, r)] = f32::from_le_bytes(payload[k..k + 4].try_into().unwrap()) as f64;
        }
    }
    Ok((ShotGather::new(shot_id, time, traces)?, receivers))
}
