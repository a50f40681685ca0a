//! Data reconstruction inversion: an augmented-Lagrangian waveform inversion
//! that keeps its dual variable in data space. Each iteration reconstructs
//! the residual data (either by one gradient step with an optimal step
//! length, or exactly through the data-space normal system), forms the
//! extended wavefield u_e = u_r + alpha * du, and updates the model through
//! the normalized imaging condition.

use ndarray::Array2;
use rayon::prelude::*;

use crate::dataspace::{self, DataVector};
use crate::domain::{Acquisition, ShotGather, SlownessSquaredModel, TimeAxis, Wavelet};
use crate::error::{Result, WdriError};
use crate::fwi::{self, IterationRecord};
use crate::linalg::CgOutcome;
use crate::propagator::{
    ForwardField, Propagator, ReverseStream, SourceRef, StorageMode, WavefieldMovie,
};

/// How the data-space subproblem is solved each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriVariant {
    /// One gradient step with the optimal step length; 4 wave solves per
    /// shot per iteration.
    GradientDescent,
    /// Full solve of (G G^T + mu I) dy = dd_r by matrix-free CG; two extra
    /// solves per CG iteration.
    Exact,
}

#[derive(Debug, Clone)]
pub struct DriConfig {
    pub max_iterations: usize,
    pub variant: DriVariant,
    /// penalty parameter (exact variant only)
    pub mu: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub storage: StorageMode,
    /// stop when normalized misfit falls below this
    pub tolerance: f64,
    /// stabilization of the imaging-condition division
    pub epsilon_frac: f64,
    pub mask_halo: usize,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for DriConfig {
    fn default() -> Self {
        DriConfig {
            max_iterations: 50,
            variant: DriVariant::GradientDescent,
            mu: 1.0,
            cg_tol: 1e-6,
            cg_max_iter: 100,
            storage: StorageMode::Full,
            tolerance: 1e-8,
            epsilon_frac: 1e-3,
            mask_halo: 2,
            v_min: 300.0,
            v_max: 8000.0,
        }
    }
}

impl DriConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu", self.mu),
            ("cg_tol", self.cg_tol),
            ("tolerance", self.tolerance),
            ("epsilon_frac", self.epsilon_frac),
        ] {
            if !(v > 0.0) {
                return Err(WdriError::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.v_min > 0.0 && self.v_max > self.v_min) {
            return Err(WdriError::InvalidArgument(format!(
                "need 0 < v_min < v_max, got [{}, {}]",
                self.v_min, self.v_max
            )));
        }
        Ok(())
    }
}

/// Per-shot dual accumulators and step-length history.
#[derive(Debug, Clone)]
pub struct DualState {
    /// running sum of the data-space updates, one accumulator per shot
    pub y: Vec<ShotGather>,
    /// alpha per shot, one inner Vec per iteration
    pub alpha_history: Vec<Vec<f64>>,
}

impl DualState {
    pub fn new(acquisition: &Acquisition, time: TimeAxis) -> DualState {
        DualState {
            y: (0..acquisition.n_sources())
                .map(|s| ShotGather::zeros(s, time, acquisition.n_receivers()))
                .collect(),
            alpha_history: Vec::new(),
        }
    }
}

/// Optimal step length alpha = <q, r> / <q, q> for the data-space gradient
/// step, with q = G G^T r.
pub fn step_length(q: &ShotGather, r: &ShotGather) -> Result<f64> {
    let qq = q.norm_squared();
    if qq == 0.0 {
        return Err(WdriError::ZeroDirection);
    }
    Ok(q.dot(r)? / qq)
}

/// Exact data-space update dy = (G G^T + mu I)^-1 dd_r by matrix-free CG.
pub fn dri_exact_data_update(
    prop: &Propagator,
    model: &SlownessSquaredModel,
    r: &ShotGather,
    acquisition: &Acquisition,
    mu: f64,
    cg_tol: f64,
    cg_max_iter: usize,
) -> Result<(ShotGather, CgOutcome)> {
    if !(mu > 0.0) {
        return Err(WdriError::InvalidArgument(format!(
            "mu must be positive, got {mu}"
        )));
    }
    let rv = DataVector::from_gather(r);
    let (time, nr) = (rv.time, rv.nr);
    let apply = |x: &[f64]| -> Result<Vec<f64>> {
        let g = DataVector {
            time,
            nr,
            values: x.to_vec(),
        }
        .to_gather(r.shot_id);
        let qx = dataspace::apply_ggt(prop, model, &g, acquisition)?;
        let qv = DataVector::from_gather(&qx);
        Ok(qv
            .values
            .iter()
            .zip(x.iter())
            .map(|(&q, &xi)| q + mu * xi)
            .collect())
    };
    let (dy, outcome) = crate::linalg::conjugate_gradient(apply, &rv.values, cg_tol, cg_max_iter)?;
    let dy = DataVector {
        time,
        nr,
        values: dy,
    }
    .to_gather(r.shot_id);
    Ok((dy, outcome))
}

struct ShotWork {
    numer: Array2<f64>,
    denom: Array2<f64>,
    misfit: f64,
    alpha: f64,
    y_next: ShotGather,
}

/// One DRI pass for one shot. Gradient-descent variant: exactly 4 solves
/// (forward, adjoint of dd_r, volumetric forward, adjoint of the scaled
/// dual source). The extended field u_e = u_r + alpha * du is combined
/// frame-by-frame; with boundary storage, u_r and du are re-streamed in
/// reverse while the correlation sums accumulate incrementally.
#[allow(clippy::too_many_arguments)]
fn shot_pass(
    prop: &Propagator,
    config: &DriConfig,
    model: &SlownessSquaredModel,
    wavelet: &Wavelet,
    acquisition: &Acquisition,
    shot: usize,
    observed: &ShotGather,
    y_prev: &ShotGather,
) -> Result<ShotWork> {
    let source = acquisition.sources()[shot];
    // (1) forward in the current model
    let (u_r, predicted) = prop.forward(model, wavelet, source, acquisition, config.storage)?;
    let dd_r = observed.sub(&predicted)?;
    let misfit = 0.5 * dd_r.norm_squared();

    // (2) data-space update direction
    let (delta_y, alpha) = match config.variant {
        DriVariant::GradientDescent => (dd_r.clone(), None),
        DriVariant::Exact => {
            let (dy, _outcome) = dri_exact_data_update(
                prop,
                model,
                &dd_r,
                acquisition,
                config.mu,
                config.cg_tol,
                config.cg_max_iter,
            )?;
            (dy, Some(1.0))
        }
    };
    // residual field du = A^-1 G^T delta_y, with q = P du for the step length
    let w = prop.adjoint(model, &delta_y, acquisition)?;
    let (du, q) = prop.forward_volumetric(model, &w, acquisition, config.storage)?;
    let alpha = match alpha {
        Some(a) => a,
        None => step_length(&q, &dd_r).unwrap_or(0.0),
    };

    // (3) dual update and the extended adjoint field
    let y_next = ShotGather {
        shot_id: y_prev.shot_id,
        time: y_prev.time,
        traces: &y_prev.traces + &delta_y.traces,
    };
    let mut adj_src = ShotGather {
        shot_id: shot,
        time: dd_r.time,
        traces: &y_next.traces + &delta_y.traces,
    };
    // fold the step length into the adjoint source so the imaging numerator
    // directly carries alpha * dm
    adj_src.traces.mapv_inplace(|x| alpha * x);
    let v_e = prop.adjoint(model, &adj_src, acquisition)?;

    // (4) imaging sums over u_e = u_r + alpha * du
    let (numer, denom) = match (u_r, du) {
        (ForwardField::Full(u_r), ForwardField::Full(du)) => {
            let u_e = WavefieldMovie::new(
                model.grid().clone(),
                prop.time(),
                &u_r.frames + alpha * &du.frames,
            )?;
            fwi::imaging_sums(&u_e, &v_e)?
        }
        (ForwardField::Checkpoint(cu), ForwardField::Checkpoint(cd)) => {
            let su = prop.reconstruct_forward(
                model,
                SourceRef::Point {
                    position: source,
                    wavelet,
                },
                &cu,
            )?;
            let sd = prop.reconstruct_forward(model, SourceRef::Volumetric(&w), &cd)?;
            imaging_sums_streamed(su, sd, alpha, &v_e)?
        }
        _ => unreachable!("storage mode is uniform"),
    };
    Ok(ShotWork {
        numer,
        denom,
        misfit,
        alpha,
        y_next,
    })
}

/// Incremental version of `fwi::imaging_sums` over two reverse frame
/// streams combined as c[n] = u[n] + alpha * d[n], correlated against the
/// adjoint movie. Matches the full-storage path to round-off.
fn imaging_sums_streamed(
    stream_u: ReverseStream<'_>,
    stream_d: ReverseStream<'_>,
    alpha: f64,
    adjoint: &WavefieldMovie,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (nt, nx, nz) = adjoint.frames.dim();
    let inv_dt2 = 1.0 / (adjoint.time.dt * adjoint.time.dt);
    let mut numer = Array2::<f64>::zeros((nx, nz));
    let mut denom = Array2::<f64>::zeros((nx, nz));
    // rolling window: c[n+1], c[n]; the term at n fires once c[n-1] arrives
    let mut c_next: Option<Array2<f64>> = None;
    let mut c_cur: Option<Array2<f64>> = None;
    let mut accumulate = |n: usize,
                          next: &Array2<f64>,
                          cur: &Array2<f64>,
                          prev: Option<&Array2<f64>>|
     -> Result<()> {
        let v = adjoint.frames.index_axis(ndarray::Axis(0), n);
        ndarray::Zip::indexed(&mut numer)
            .and(&mut denom)
            .and(next)
            .and(cur)
            .and(&v)
            .for_each(|(i, j), num, den, &un, &uc, &vv| {
                let up = prev.map_or(0.0, |p| p[(i, j)]);
                let udd = (un - 2.0 * uc + up) * inv_dt2;
                *num += udd * vv;
                *den += udd * udd;
            });
        Ok(())
    };
    for (n, frame) in stream_u.zip(stream_d).map(|((nu, fu), (nd, fd))| {
        debug_assert_eq!(nu, nd);
        (nu, fu + alpha * &fd)
    }) {
        if let (Some(next), Some(cur)) = (&c_next, &c_cur) {
            // frame == c[n], and n + 1 <= nt - 2 always holds here
            accumulate(n + 1, next, cur, Some(&frame))?;
        }
        c_next = c_cur.take();
        c_cur = Some(frame);
    }
    // closing term at n = 0 with c[-1] = 0
    if nt >= 2 {
        if let (Some(next), Some(cur)) = (&c_next, &c_cur) {
            accumulate(0, next, cur, None)?;
        }
    }
    Ok((numer, denom))
}

/// Outcome of one DRI iteration.
pub struct DriIterationOutcome {
    pub model: SlownessSquaredModel,
    pub misfit: f64,
    pub alphas: Vec<f64>,
    /// false when the residual was already below tolerance and nothing moved
    pub updated: bool,
}

/// One full DRI iteration over all shots. Per-shot pipelines run in
/// parallel; the imaging numerator and denominator are reduced over shots in
/// fixed order before the single division (shots share the model, so the
/// update couples only there).
pub fn dri_iteration(
    prop: &Propagator,
    config: &DriConfig,
    wavelet: &Wavelet,
    acquisition: &Acquisition,
    observed: &[ShotGather],
    model: &SlownessSquaredModel,
    dual: &mut DualState,
) -> Result<DriIterationOutcome> {
    config.validate()?;
    fwi::check_shots(acquisition, observed)?;
    if dual.y.len() != acquisition.n_sources() {
        return Err(WdriError::ShapeMismatch(format!(
            "dual state has {} accumulators for {} sources",
            dual.y.len(),
            acquisition.n_sources()
        )));
    }
    let works: Vec<Result<ShotWork>> = (0..acquisition.n_sources())
        .into_par_iter()
        .map(|s| {
            shot_pass(
                prop,
                config,
                model,
                wavelet,
                acquisition,
                s,
                &observed[s],
                &dual.y[s],
            )
        })
        .collect();
    let grid = model.grid();
    let mut numer = Array2::<f64>::zeros((grid.nx, grid.nz));
    let mut denom = Array2::<f64>::zeros((grid.nx, grid.nz));
    let mut misfit = 0.0;
    let mut alphas = Vec::with_capacity(works.len());
    let mut y_next = Vec::with_capacity(works.len());
    for w in works {
        let w = w?;
        numer += &w.numer;
        denom += &w.denom;
        misfit += w.misfit;
        alphas.push(w.alpha);
        y_next.push(w.y_next);
    }
    let reference = fwi::reference_misfit(observed).max(f64::MIN_POSITIVE);
    if misfit / reference < config.tolerance {
        return Ok(DriIterationOutcome {
            model: model.clone(),
            misfit,
            alphas,
            updated: false,
        });
    }
    let max_denom = denom.iter().cloned().fold(0.0f64, f64::max);
    if max_denom <= 0.0 {
        return Err(WdriError::DegenerateInput(
            "extended-field illumination is identically zero".into(),
        ));
    }
    let eps = config.epsilon_frac * max_denom;
    let mut dm = ndarray::Zip::from(&numer)
        .and(&denom)
        .map_collect(|&n, &d| -n / (d + eps));
    fwi::apply_mask(&mut dm, acquisition, config.mask_halo);
    let next_model = model.updated_clipped(&dm, config.v_min, config.v_max)?;
    dual.y = y_next;
    dual.alpha_history.push(alphas.clone());
    Ok(DriIterationOutcome {
        model: next_model,
        misfit,
        alphas,
        updated: true,
    })
}

/// Final state of a DRI run.
#[derive(Debug)]
pub struct DriState {
    pub model: SlownessSquaredModel,
    pub dual: DualState,
    pub history: Vec<IterationRecord>,
}

/// Iterate `dri_iteration` until the normalized misfit drops below the
/// tolerance or `max_iterations` is reached.
#[allow(clippy::too_many_arguments)]
pub fn dri_invert(
    prop: &Propagator,
    config: &DriConfig,
    wavelet: &Wavelet,
    acquisition: &Acquisition,
    observed: &[ShotGather],
    initial: &SlownessSquaredModel,
    truth: Option<&SlownessSquaredModel>,
    mut on_iteration: impl FnMut(&IterationRecord, &SlownessSquaredModel),
) -> Result<DriState> {
    config.validate()?;
    fwi::check_shots(acquisition, observed)?;
    let reference = fwi::reference_misfit(observed).max(f64::MIN_POSITIVE);
    let mut model = initial.clone();
    let mut dual = DualState::new(acquisition, prop.time());
    let mut history = Vec::new();
    for iteration in 0..config.max_iterations {
        let outcome = dri_iteration(
            prop,
            config,
            wavelet,
            acquisition,
            observed,
            &model,
            &mut dual,
        )?;
        let mean_alpha = if outcome.alphas.is_empty() {
            0.0
        } else {
            outcome.alphas.iter().sum::<f64>() / outcome.alphas.len() as f64
        };
        let record = fwi::record_of(
            iteration,
            outcome.misfit,
            outcome.misfit / reference,
            prop,
            if outcome.updated { mean_alpha } else { 0.0 },
            &outcome.model,
            truth,
        );
        on_iteration(&record, &model);
        history.push(record);
        let updated = outcome.updated;
        model = outcome.model;
        if !updated {
            break;
        }
    }
    Ok(DriState {
        model,
        dual,
        history,
    })
}
