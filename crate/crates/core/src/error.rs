use std::path::PathBuf;
use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum WdriError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("CFL stability violation: dt = {dt:.6e} s exceeds the stable bound {max_dt:.6e} s")]
    Stability { dt: f64, max_dt: f64 },

    #[error("wavefield diverged (non-finite value) at time step {step}")]
    Divergence { step: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("zero step direction: residual already reconstructed")]
    ZeroDirection,

    #[error("checkpoint inconsistent with solve parameters: {0}")]
    Inconsistent(String),

    #[error("dense assembly refused: {requested} columns exceeds the guard of {guard}")]
    SizeGuard { requested: usize, guard: usize },

    #[error("format error in {path}: {message} (byte offset {offset})")]
    Format {
        path: PathBuf,
        message: String,
        offset: u64,
    },

    #[error("config error at {path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, WdriError>;

impl WdriError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WdriError::Io {
            path: path.into(),
            source,
        }
    }
}
