use crate::error::{Result, WdriError};

/// Discrete recording time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAxis {
    pub nt: usize,
    pub dt: f64,
}

impl TimeAxis {
    pub fn new(nt: usize, dt: f64) -> Result<Self> {
        if nt < 2 {
            return Err(WdriError::InvalidArgument(format!(
                "time axis needs at least 2 samples, got {nt}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(WdriError::InvalidArgument(format!(
                "dt must be positive and finite, got {dt}"
            )));
        }
        Ok(TimeAxis { nt, dt })
    }

    /// Record length tau = (nt - 1) * dt.
    pub fn record_length(&self) -> f64 {
        (self.nt - 1) as f64 * self.dt
    }

    pub fn sample(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn nyquist(&self) -> f64 {
        0.5 / self.dt
    }
}
