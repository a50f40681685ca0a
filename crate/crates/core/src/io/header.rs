//! Shared text-header parser for the binary file formats: a magic line, then
//! `key=value` lines (UTF-8, LF), then `end_header`, then the payload.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Result, WdriError};

/// Rust's float `Display` prints the shortest string that parses back to the
/// same value, so the text header round-trips bit-exactly.
pub fn format_f64(v: f64) -> String {
    format!("{v}")
}

pub struct HeaderReader {
    path: PathBuf,
    /// key -> (value, byte offset of the line start)
    entries: HashMap<String, (String, u64)>,
    read_keys: Vec<String>,
    payload_offset: usize,
    last_offset: u64,
}

impl HeaderReader {
    pub fn new(path: &Path, bytes: &[u8], magic: &str) -> Result<Self> {
        let fail = |message: String, offset: u64| WdriError::Format {
            path: path.to_path_buf(),
            message,
            offset,
        };
        let mut pos = 0usize;
        let next_line = |pos: &mut usize| -> Option<(String, u64)> {
            if *pos >= bytes.len() {
                return None;
            }
            let start = *pos;
            let end = bytes[start..]
                .iter()
                .position(|&b| b == b'\n')
                .map(|k| start + k)?;
            *pos = end + 1;
            let line = String::from_utf8_lossy(&bytes[start..end]).into_owned();
            Some((line, start as u64))
        };

        let (first, _) =
            next_line(&mut pos).ok_or_else(|| fail("file too short for a header".into(), 0))?;
        if first != magic {
            return Err(fail(
                format!("bad magic: expected {magic:?}, found {first:?}"),
                0,
            ));
        }

        let mut entries = HashMap::new();
        loop {
            let (line, offset) = next_line(&mut pos).ok_or_else(|| {
                fail("header ended without end_header".into(), bytes.len() as u64)
            })?;
            if line == "end_header" {
                break;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(fail(format!("malformed header line {line:?}"), offset));
            };
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (value.trim().to_string(), offset))
                .is_some()
            {
                return Err(fail(format!("duplicate header key {key:?}"), offset));
            }
        }
        Ok(HeaderReader {
            path: path.to_path_buf(),
            entries,
            read_keys: Vec::new(),
            payload_offset: pos,
            last_offset: 0,
        })
    }

    pub fn error(&self, message: String) -> WdriError {
        WdriError::Format {
            path: self.path.clone(),
            message,
            offset: self.last_offset,
        }
    }

    pub fn optional<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let Some((value, offset)) = self.entries.get(key) else {
            return Ok(None);
        };
        self.last_offset = *offset;
        self.read_keys.push(key.to_string());
        value
            .parse::<T>()
            .map(Some)
            .map_err(|e| self.error(format!("bad value for {key}: {e}")))
    }

    pub fn required<T>(&mut self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.optional(key)?
            .ok_or_else(|| self.error(format!("missing header key {key:?}")))
    }

    /// Consume the reader; unknown header keys are an error. Returns the byte
    /// offset of the payload.
    pub fn finish(mut self) -> Result<usize> {
        for key in &self.read_keys {
            self.entries.remove(key);
        }
        if let Some((key, (_, offset))) = self.entries.iter().min_by_key(|(_, (_, offset))| *offset)
        {
            return Err(WdriError::Format {
                path: self.path.clone(),
                message: format!("unknown header key {key:?}"),
                offset: *offset,
            });
        }
        Ok(self.payload_offset)
    }
}
