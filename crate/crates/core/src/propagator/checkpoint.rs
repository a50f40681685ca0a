use ndarray::Array2;

use super::SourceRef;
use crate::domain::{SlownessSquaredModel, TimeAxis};

/// Identifies the (model, time axis, source) combination that produced a
/// checkpoint so a reconstruction request with different inputs is rejected
/// instead of silently returning wrong frames.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Fingerprint {
    nx: usize,
    nz: usize,
    nt: usize,
    dt_bits: u64,
    model_bits: u64,
    source: SourceTag,
    pub(crate) halo_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum SourceTag {
    Point {
        x_bits: u64,
        z_bits: u64,
        wavelet_bits: u64,
    },
    Volumetric {
        sum_bits: u64,
    },
}

fn sum_bits<'a>(values: impl Iterator<Item = &'a f64>) -> u64 {
    let mut acc = 0.0f64;
    let mut sq = 0.0f64;
    for &v in values {
        acc += v;
        sq += v * v;
    }
    acc.to_bits() ^ sq.to_bits().rotate_left(17)
}

impl Fingerprint {
    pub fn new(model: &SlownessSquaredModel, time: TimeAxis, source: &SourceRef<'_>) -> Self {
        let grid = model.grid();
        let source = match source {
            SourceRef::Point { position, wavelet } => SourceTag::Point {
                x_bits: position.0.to_bits(),
                z_bits: position.1.to_bits(),
                wavelet_bits: sum_bits(wavelet.samples.iter()),
            },
            SourceRef::Volumetric(vol) => SourceTag::Volumetric {
                sum_bits: sum_bits(vol.frames.iter()),
            },
        };
        Fingerprint {
            nx: grid.nx,
            nz: grid.nz,
            nt: time.nt,
            dt_bits: time.dt.to_bits(),
            model_bits: sum_bits(model.field().iter()),
            source,
            halo_len: 2 * (grid.nx + 2) + 2 * grid.nz,
        }
    }
}

/// Compressed forward-wavefield storage: the sqrt-tapered halo ring around
/// the physical region at every step plus the final two physical slices.
/// Frames are re-created in reverse time order by
/// [`Propagator::reconstruct_forward`](super::Propagator::reconstruct_forward).
pub struct BoundaryCheckpoint {
    /// strips[n] holds the halo values of the sqrt-scaled field at step n,
    /// in [`halo_indices`](super::pad::PaddedDomain::halo_indices) order
    pub(crate) strips: Vec<Vec<f64>>,
    /// physical slice of u[nt-1]
    pub(crate) last: Array2<f64>,
    /// physical slice of u[nt-2]
    pub(crate) second_last: Array2<f64>,
    pub(crate) fingerprint: Fingerprint,
}

impl BoundaryCheckpoint {
    /// Approximate heap footprint, for storage-strategy reporting.
    pub fn memory_bytes(&self) -> usize {
        let strip: usize = self.strips.iter().map(|s| s.len() * 8).sum();
        strip + 8 * (self.last.len() + self.second_last.len())
    }
}
