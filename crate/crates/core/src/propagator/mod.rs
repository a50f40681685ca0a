//! Finite-difference time-domain solver for the constant-density acoustic
//! wave equation m * u_tt - lap(u) = b, its exact discrete adjoint, and
//! wavefield storage strategies.
//!
//! The scheme is 2nd order in time and space (5-point Laplacian) with a
//! multiplicative sponge taper. The taper is split as sqrt-factors around the
//! stencil so every per-step matrix is spatially symmetric; the adjoint below
//! is the literal transpose of the forward recursion, which makes the
//! dot-product test hold to round-off.

mod checkpoint;
mod movie;
mod pad;

pub use checkpoint::BoundaryCheckpoint;
pub use movie::{
    illumination, second_time_derivative, zero_lag_correlate, VolumetricSource, WavefieldMovie,
};
pub use pad::{AbsorbingConfig, FreeSurface};

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array2, Array3};

use crate::domain::{
    cfl_max_dt, Acquisition, Position, ShotGather, SlownessSquaredModel, TimeAxis, Wavelet,
};
use crate::error::{Result, WdriError};
use checkpoint::Fingerprint;
use pad::PaddedDomain;

/// How the forward wavefield is kept for later correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageMode {
    /// Keep every frame in memory.
    Full,
    /// Keep per-step boundary strips plus the final two slices; frames are
    /// re-created by reverse stepping (about one extra solve of work).
    Boundary,
}

/// Forward-solve output in the chosen storage mode.
pub enum ForwardField {
    Full(WavefieldMovie),
    Checkpoint(BoundaryCheckpoint),
}

impl ForwardField {
    pub fn unwrap_full(self) -> WavefieldMovie {
        match self {
            ForwardField::Full(m) => m,
            ForwardField::Checkpoint(_) => panic!("expected full movie storage"),
        }
    }

    pub fn unwrap_checkpoint(self) -> BoundaryCheckpoint {
        match self {
            ForwardField::Checkpoint(c) => c,
            ForwardField::Full(_) => panic!("expected boundary checkpoint"),
        }
    }
}

/// Source term of one solve.
#[derive(Clone, Copy)]
pub enum SourceRef<'a> {
    Point {
        position: Position,
        wavelet: &'a Wavelet,
    },
    Volumetric(&'a VolumetricSource),
}

enum RecordMode {
    FullMovie,
    Checkpoint,
    GatherOnly,
}

/// Wave-equation solver bound to a time axis and sponge configuration.
/// The solve counter increments exactly once per forward, volumetric-forward,
/// or adjoint call; checkpoint re-streaming does not count.
pub struct Propagator {
    time: TimeAxis,
    absorb: AbsorbingConfig,
    solves: AtomicU64,
}

impl Propagator {
    pub fn new(time: TimeAxis, absorb: AbsorbingConfig) -> Self {
        Propagator {
            time,
            absorb,
            solves: AtomicU64::new(0),
        }
    }

    pub fn time(&self) -> TimeAxis {
        self.time
    }

    pub fn absorbing(&self) -> &AbsorbingConfig {
        &self.absorb
    }

    pub fn solve_count(&self) -> u64 {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn reset_solve_count(&self) {
        self.solves.store(0, Ordering::Relaxed);
    }

    fn check_cfl(&self, model: &SlownessSquaredModel) -> Result<()> {
        let max_dt = cfl_max_dt(model);
        if self.time.dt > max_dt * (1.0 + 1e-12) {
            return Err(WdriError::Stability {
                dt: self.time.dt,
                max_dt,
            });
        }
        Ok(())
    }

    /// Point-source forward solve: gather = P A(m)^-1 b.
    pub fn forward(
        &self,
        model: &SlownessSquaredModel,
        wavelet: &Wavelet,
        source_position: Position,
        acquisition: &Acquisition,
        mode: StorageMode,
    ) -> Result<(ForwardField, ShotGather)> {
        let record = match mode {
            StorageMode::Full => RecordMode::FullMovie,
            StorageMode::Boundary => RecordMode::Checkpoint,
        };
        let (field, gather) = self.run_forward(
            model,
            SourceRef::Point {
                position: source_position,
                wavelet,
            },
            acquisition,
            record,
        )?;
        Ok((field.expect("storage requested"), gather))
    }

    /// Point-source forward solve keeping only the receiver traces; for
    /// plain data simulation where no wavefield is needed afterwards.
    pub fn forward_gather(
        &self,
        model: &SlownessSquaredModel,
        wavelet: &Wavelet,
        source_position: Position,
        acquisition: &Acquisition,
    ) -> Result<ShotGather> {
        let (_, gather) = self.run_forward(
            model,
            SourceRef::Point {
                position: source_position,
                wavelet,
            },
            acquisition,
            RecordMode::GatherOnly,
        )?;
        Ok(gather)
    }

    /// Forward solve with a full space-time right-hand side.
    pub fn forward_volumetric(
        &self,
        model: &SlownessSquaredModel,
        source: &VolumetricSource,
        acquisition: &Acquisition,
        mode: StorageMode,
    ) -> Result<(ForwardField, ShotGather)> {
        let record = match mode {
            StorageMode::Full => RecordMode::FullMovie,
            StorageMode::Boundary => RecordMode::Checkpoint,
        };
        let (field, gather) =
            self.run_forward(model, SourceRef::Volumetric(source), acquisition, record)?;
        Ok((field.expect("storage requested"), gather))
    }

    /// Forward solve keeping only the gather (used by data-space operators).
    pub fn forward_volumetric_gather(
        &self,
        model: &SlownessSquaredModel,
        source: &VolumetricSource,
        acquisition: &Acquisition,
    ) -> Result<ShotGather> {
        let (_, gather) = self.run_forward(
            model,
            SourceRef::Volumetric(source),
            acquisition,
            RecordMode::GatherOnly,
        )?;
        Ok(gather)
    }

    fn run_forward(
        &self,
        model: &SlownessSquaredModel,
        source: SourceRef<'_>,
        acquisition: &Acquisition,
        record: RecordMode,
    ) -> Result<(Option<ForwardField>, ShotGather)> {
        self.check_cfl(model)?;
        let grid = model.grid().clone();
        let nt = self.time.nt;
        let point = match source {
            SourceRef::Point { position, wavelet } => {
                if wavelet.samples.len() != nt {
                    return Err(WdriError::ShapeMismatch(format!(
                        "wavelet has {} samples, time axis has {nt}",
                        wavelet.samples.len()
                    )));
                }
                Some((grid.nearest_index(position.0, position.1)?, wavelet))
            }
            SourceRef::Volumetric(vol) => {
                if vol.frames.dim() != (nt, grid.nx, grid.nz) {
                    return Err(WdriError::ShapeMismatch(format!(
                        "volumetric source is {:?}, expected ({nt}, {}, {})",
                        vol.frames.dim(),
                        grid.nx,
                        grid.nz
                    )));
                }
                None
            }
        };
        self.solves.fetch_add(1, Ordering::Relaxed);

        let pd = PaddedDomain::new(model, &self.absorb, self.time.dt)?;
        let n_pad = pd.pnx * pd.pnz;
        let mut u_prev = vec![0.0f64; n_pad];
        let mut u_cur = vec![0.0f64; n_pad];
        let mut u_next = vec![0.0f64; n_pad];
        let mut scaled = vec![0.0f64; n_pad];

        let rec_pad: Vec<usize> = acquisition
            .receiver_indices()
            .iter()
            .map(|&(i, j)| pd.pad_index(i, j))
            .collect();
        let mut gather = ShotGather::zeros(0, self.time, rec_pad.len());

        let mut movie = match record {
            RecordMode::FullMovie => Some(Array3::<f64>::zeros((nt, grid.nx, grid.nz))),
            _ => None,
        };
        let halo = pd.halo_indices();
        let mut strips: Vec<Vec<f64>> = match record {
            RecordMode::Checkpoint => Vec::with_capacity(nt.saturating_sub(1)),
            _ => Vec::new(),
        };
        let mut slice_prev: Option<Array2<f64>> = None; // u[nt-2] physical

        for n in 0..nt - 1 {
            // scaled = wh * u[n]
            for (s, (&u, &wh)) in scaled.iter_mut().zip(u_cur.iter().zip(pd.wh.iter())) {
                *s = wh * u;
            }
            if matches!(record, RecordMode::Checkpoint) {
                strips.push(halo.iter().map(|&idx| scaled[idx]).collect());
            }
            step_stencil(&pd, &scaled, &u_prev, &mut u_next);
            // source injection: u[n+1] += wh * d * b[n]
            match (&point, source) {
                (Some(((si, sj), wavelet)), _) => {
                    let idx = pd.pad_index(*si, *sj);
                    u_next[idx] += pd.wh[idx] * pd.d[idx] * wavelet.samples[n] / pd.cell_area;
                }
                (None, SourceRef::Volumetric(vol)) => {
                    let frame = vol.frames.index_axis(ndarray::Axis(0), n);
                    for i in 0..grid.nx {
                        let row = frame.row(i);
                        for j in 0..grid.nz {
                            let idx = pd.pad_index(i, j);
                            u_next[idx] += pd.wh[idx] * pd.d[idx] * row[j];
                        }
                    }
                }
                _ => unreachable!(),
            }
            std::mem::swap(&mut u_prev, &mut u_cur);
            std::mem::swap(&mut u_cur, &mut u_next);
            // u_cur now holds u[n+1]
            if n % 64 == 63 && !u_cur.iter().all(|v| v.is_finite()) {
                return Err(WdriError::Divergence { step: n + 1 });
            }
            for (r, &idx) in rec_pad.iter().enumerate() {
                gather.traces[(n + 1, r)] = u_cur[idx];
            }
            if let Some(movie) = movie.as_mut() {
                let mut frame = movie.index_axis_mut(ndarray::Axis(0), n + 1);
                for i in 0..grid.nx {
                    for j in 0..grid.nz {
                        frame[(i, j)] = u_cur[pd.pad_index(i, j)];
                    }
                }
            }
            if matches!(record, RecordMode::Checkpoint) && n + 1 == nt - 2 {
                slice_prev = Some(crop_physical(&pd, &u_cur));
            }
        }
        if !u_cur.iter().all(|v| v.is_finite()) {
            return Err(WdriError::Divergence { step: nt - 1 });
        }

        let field = match record {
            RecordMode::FullMovie => Some(ForwardField::Full(WavefieldMovie::new(
                grid.clone(),
                self.time,
                movie.take().expect("movie recorded"),
            )?)),
            RecordMode::Checkpoint => {
                let last = crop_physical(&pd, &u_cur);
                let second_last = if nt == 2 {
                    crop_physical(&pd, &u_prev)
                } else {
                    slice_prev.expect("second-to-last slice recorded")
                };
                Some(ForwardField::Checkpoint(BoundaryCheckpoint {
                    strips,
                    last,
                    second_last,
                    fingerprint: Fingerprint::new(model, self.time, &source),
                }))
            }
            RecordMode::GatherOnly => None,
        };
        Ok((field, gather))
    }

    /// Adjoint solve A^-T P^T r by time-reversed stepping with residual
    /// traces injected at the receivers. The returned movie is in forward
    /// time order and is the exact transpose of the forward map.
    pub fn adjoint(
        &self,
        model: &SlownessSquaredModel,
        residual: &ShotGather,
        acquisition: &Acquisition,
    ) -> Result<WavefieldMovie> {
        self.check_cfl(model)?;
        let grid = model.grid().clone();
        let nt = self.time.nt;
        if residual.time.nt != nt || (residual.time.dt - self.time.dt).abs() > 1e-15 {
            return Err(WdriError::ShapeMismatch(
                "residual time axis differs from the solver time axis".into(),
            ));
        }
        if residual.nr() != acquisition.n_receivers() {
            return Err(WdriError::ShapeMismatch(format!(
                "residual has {} traces, acquisition has {} receivers",
                residual.nr(),
                acquisition.n_receivers()
            )));
        }
        self.solves.fetch_add(1, Ordering::Relaxed);

        let pd = PaddedDomain::new(model, &self.absorb, self.time.dt)?;
        let n_pad = pd.pnx * pd.pnz;
        let mut lam_next2 = vec![0.0f64; n_pad]; // lambda[j+2]
        let mut lam_next = vec![0.0f64; n_pad]; // lambda[j+1]
        let mut lam = vec![0.0f64; n_pad];
        let mut scaled = vec![0.0f64; n_pad];
        let mut src = vec![0.0f64; n_pad];

        let rec_pad: Vec<usize> = acquisition
            .receiver_indices()
            .iter()
            .map(|&(i, j)| pd.pad_index(i, j))
            .collect();

        let mut frames = Array3::<f64>::zeros((nt, grid.nx, grid.nz));
        for j in (0..nt).rev() {
            // scaled = wh * lambda[j+1]; src = d * scaled, which is also the
            // output frame v[j] = D * Wh * lambda[j+1]
            for (s, (&l, &wh)) in scaled.iter_mut().zip(lam_next.iter().zip(pd.wh.iter())) {
                *s = wh * l;
            }
            for (o, (&s, &d)) in src.iter_mut().zip(scaled.iter().zip(pd.d.iter())) {
                *o = d * s;
            }
            {
                let mut frame = frames.index_axis_mut(ndarray::Axis(0), j);
                for i in 0..grid.nx {
                    for jz in 0..grid.nz {
                        frame[(i, jz)] = src[pd.pad_index(i, jz)];
                    }
                }
            }
            if j == 0 {
                break;
            }
            // lambda[j] = P^T r[j] + Wh (2 I + L D) Wh lambda[j+1] - W lambda[j+2]
            adjoint_stencil(&pd, &scaled, &src, &lam_next2, &mut lam);
            for (r, &idx) in rec_pad.iter().enumerate() {
                lam[idx] += residual.traces[(j, r)];
            }
            if j % 64 == 0 && !lam.iter().all(|v| v.is_finite()) {
                return Err(WdriError::Divergence { step: j });
            }
            std::mem::swap(&mut lam_next2, &mut lam_next);
            std::mem::swap(&mut lam_next, &mut lam);
        }
        WavefieldMovie::new(grid, self.time, frames)
    }

    /// Stream the interior frames of a checkpointed forward solve in reverse
    /// time order. Does not increment the solve counter.
    pub fn reconstruct_forward<'a>(
        &self,
        model: &SlownessSquaredModel,
        source: SourceRef<'a>,
        checkpoint: &'a BoundaryCheckpoint,
    ) -> Result<ReverseStream<'a>> {
        self.check_cfl(model)?;
        let expect = Fingerprint::new(model, self.time, &source);
        if checkpoint.fingerprint != expect {
            return Err(WdriError::Inconsistent(
                "checkpoint was produced by a different model, time axis, or source".into(),
            ));
        }
        let pd = PaddedDomain::new(model, &self.absorb, self.time.dt)?;
        let point = match source {
            SourceRef::Point { position, wavelet } => {
                let idx = model.grid().nearest_index(position.0, position.1)?;
                Some((idx, wavelet))
            }
            SourceRef::Volumetric(_) => None,
        };
        Ok(ReverseStream {
            pd,
            halo: checkpoint.fingerprint.halo_len,
            checkpoint,
            source_point: point,
            source_vol: match source {
                SourceRef::Volumetric(v) => Some(v),
                _ => None,
            },
            nt: self.time.nt,
            next_frame: self.time.nt,
            f_hi: None,
            f_lo: None,
        })
    }
}

/// Reverse-time frame stream from a [`BoundaryCheckpoint`]. Yields
/// `(frame_index, physical frame)` for n = nt-1 down to 0.
pub struct ReverseStream<'a> {
    pd: PaddedDomain,
    #[allow(dead_code)]
    halo: usize,
    checkpoint: &'a BoundaryCheckpoint,
    source_point: Option<((usize, usize), &'a Wavelet)>,
    source_vol: Option<&'a VolumetricSource>,
    nt: usize,
    next_frame: usize,         // frame index to yield next, plus one
    f_hi: Option<Array2<f64>>, // u[n+1]
    f_lo: Option<Array2<f64>>, // u[n]
}

impl Iterator for ReverseStream<'_> {
    type Item = (usize, Array2<f64>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next_frame == 0 {
            return None;
        }
        let n = self.next_frame - 1;
        self.next_frame = n;
        if n == self.nt - 1 {
            self.f_hi = Some(self.checkpoint.last.clone());
            return Some((n, self.checkpoint.last.clone()));
        }
        if n == self.nt - 2 {
            self.f_lo = Some(self.checkpoint.second_last.clone());
            return Some((n, self.checkpoint.second_last.clone()));
        }
        // compute u[n] from u[n+2], u[n+1] via the reversed interior update
        let pd = &self.pd;
        let hi = self.f_hi.as_ref().expect("stream state");
        let lo = self.f_lo.as_ref().expect("stream state");
        let mut scaled = vec![0.0f64; pd.pnx * pd.pnz];
        for i in 0..pd.nx {
            for j in 0..pd.nz {
                scaled[pd.pad_index(i, j)] = lo[(i, j)];
            }
        }
        let strip = &self.checkpoint.strips[n + 1];
        for (&idx, &v) in pd.halo_indices().iter().zip(strip.iter()) {
            scaled[idx] = v;
        }
        let mut prev = Array2::<f64>::zeros((pd.nx, pd.nz));
        let pnz = pd.pnz;
        for i in 0..pd.nx {
            for j in 0..pd.nz {
                let idx = pd.pad_index(i, j);
                let lap = (scaled[idx - pnz] - 2.0 * scaled[idx] + scaled[idx + pnz]) * pd.inv_dx2
                    + (scaled[idx - 1] - 2.0 * scaled[idx] + scaled[idx + 1]) * pd.inv_dz2;
                let b = match (&self.source_point, &self.source_vol) {
                    (Some(((si, sj), wavelet)), _) => {
                        if i == *si && j == *sj {
                            wavelet.samples[n + 1] / pd.cell_area
                        } else {
                            0.0
                        }
                    }
                    (None, Some(vol)) => vol.frames[(n + 1, i, j)],
                    _ => 0.0,
                };
                prev[(i, j)] = 2.0 * lo[(i, j)] + pd.d[idx] * (lap + b) - hi[(i, j)];
            }
        }
        self.f_hi = self.f_lo.take();
        self.f_lo = Some(prev.clone());
        Some((n, prev))
    }
}

fn crop_physical(pd: &PaddedDomain, field: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn((pd.nx, pd.nz), |(i, j)| field[pd.pad_index(i, j)])
}

/// u_next = wh * (2 * scaled + d * lap(scaled)) - w * u_prev over the
/// interior; the one-cell rim is never written and stays zero.
fn step_stencil(pd: &PaddedDomain, scaled: &[f64], u_prev: &[f64], u_next: &mut [f64]) {
    let pnz = pd.pnz;
    for i in 1..pd.pnx - 1 {
        let base = i * pnz;
        let up_row = &scaled[base - pnz..base];
        let mid_row = &scaled[base..base + pnz];
        let dn_row = &scaled[base + pnz..base + 2 * pnz];
        let wh_row = &pd.wh[base..base + pnz];
        let w_row = &pd.w[base..base + pnz];
        let d_row = &pd.d[base..base + pnz];
        let prev_row = &u_prev[base..base + pnz];
        let out_row = &mut u_next[base..base + pnz];
        for j in 1..pnz - 1 {
            let lap = (up_row[j] - 2.0 * mid_row[j] + dn_row[j]) * pd.inv_dx2
                + (mid_row[j - 1] - 2.0 * mid_row[j] + mid_row[j + 1]) * pd.inv_dz2;
            out_row[j] = wh_row[j] * (2.0 * mid_row[j] + d_row[j] * lap) - w_row[j] * prev_row[j];
        }
    }
}

/// lam = wh * (2 * scaled + lap(src)) - w * lam_next2 over the interior,
/// where src = d * scaled. Transpose of `step_stencil`.
fn adjoint_stencil(
    pd: &PaddedDomain,
    scaled: &[f64],
    src: &[f64],
    lam_next2: &[f64],
    lam: &mut [f64],
) {
    let pnz = pd.pnz;
    for i in 1..pd.pnx - 1 {
        let base = i * pnz;
        let up_row = &src[base - pnz..base];
        let mid_src = &src[base..base + pnz];
        let dn_row = &src[base + pnz..base + 2 * pnz];
        let mid_sc = &scaled[base..base + pnz];
        let wh_row = &pd.wh[base..base + pnz];
        let w_row = &pd.w[base..base + pnz];
        let n2_row = &lam_next2[base..base + pnz];
        let out_row = &mut lam[base..base + pnz];
        for j in 1..pnz - 1 {
            let lap = (up_row[j] - 2.0 * mid_src[j] + dn_row[j]) * pd.inv_dx2
                + (mid_src[j - 1] - 2.0 * mid_src[j] + mid_src[j + 1]) * pd.inv_dz2;
            out_row[j] = wh_row[j] * (2.0 * mid_sc[j] + lap) - w_row[j] * n2_row[j];
        }
    }
}
