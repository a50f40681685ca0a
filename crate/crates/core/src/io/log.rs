//! Misfit convergence log: plain CSV, one row per inversion iteration,
//! flushed on every append so a crash leaves a readable prefix.

use std::io::Write;
use std::path::Path;

use crate::error::{Result, WdriError};

use super::header::format_f64;

const HEADER: &str = "iteration,misfit,normalized_misfit,solves,wall_time_s,model_rmse";

#[derive(Debug, Clone, PartialEq)]
pub struct MisfitLogRecord {
    pub iteration: usize,
    pub misfit: f64,
    pub normalized_misfit: f64,
    pub solves: u64,
    pub wall_time_s: f64,
    pub model_rmse: Option<f64>,
}

/// Append one record. Creates the file (with a header line) on first use and
/// rejects iteration numbers that do not strictly increase.
pub fn append_misfit_log(path: impl AsRef<Path>, record: &MisfitLogRecord) -> Result<()> {
    let path = path.as_ref();
    let existing = if path.exists() {
        let records = read_misfit_log(path)?;
        if let Some(last) = records.last() {
            if record.iteration <= last.iteration {
                return Err(WdriError::InvalidArgument(format!(
                    "log iteration must increase: last was {}, got {}",
                    last.iteration, record.iteration
                )));
            }
        }
        true
    } else {
        false
    };
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| WdriError::io(path, e))?;
    let io_err = |e| WdriError::io(path, e);
    if !existing {
        writeln!(file, "{HEADER}").map_err(io_err)?;
    }
    let rmse = record.model_rmse.map(format_f64).unwrap_or_default();
    writeln!(
        file,
        "{},{},{},{},{},{}",
        record.iteration,
        format_f64(record.misfit),
        format_f64(record.normalized_misfit),
        record.solves,
        format_f64(record.wall_time_s),
        rmse
    )
    .map_err(io_err)?;
    file.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_misfit_log(path: impl AsRef<Path>) -> Result<Vec<MisfitLogRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| WdriError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == HEADER => {}
        _ => {
            return Err(WdriError::Format {
                path: path.to_path_buf(),
                message: "missing misfit-log header line".into(),
                offset: 0,
            })
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parsed = (|| -> Option<MisfitLogRecord> {
            if fields.len() != 6 {
                return None;
            }
            Some(MisfitLogRecord {
                iteration: fields[0].parse().ok()?,
                misfit: fields[1].parse().ok()?,
                normalized_misfit: fields[2].parse().ok()?,
                solves: fields[3].parse().ok()?,
                wall_time_s: fields[4].parse().ok()?,
                model_rmse: if fields[5].is_empty() {
                    None
                } else {
                    Some(fields[5].parse().ok()?)
                },
            })
        })();
        match parsed {
            Some(r) => records.push(r),
            None => {
                return Err(WdriError::Format {
                    path: path.to_path_buf(),
                    message: format!("malformed log line {}", lineno + 1),
                    offset: 0,
                })
            }
        }
    }
    Ok(records)
}
