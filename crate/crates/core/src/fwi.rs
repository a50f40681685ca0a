//! Classical reduced waveform inversion: least-squares data misfit,
//! adjoint-state gradient, pseudo-Hessian-normalized descent, and a
//! backtracking line search.

use ndarray::Array2;
use rayon::prelude::*;

use crate::domain::{Acquisition, ShotGather, SlownessSquaredModel, Wavelet};
use crate::error::{Result, WdriError};
use crate::propagator::{Propagator, StorageMode, WavefieldMovie};

/// Descent-direction normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionMode {
    Steepest,
    PseudoHessian,
}

#[derive(Debug, Clone)]
pub struct FwiConfig {
    pub max_iterations: usize,
    /// backtracking shrink factor, in (0, 1)
    pub shrink: f64,
    /// Armijo sufficient-decrease constant
    pub sufficient_decrease: f64,
    pub max_trials: usize,
    pub direction: DirectionMode,
    /// cells within this Chebyshev distance of a source/receiver node are
    /// excluded from the update
    pub mask_halo: usize,
    /// stop when normalized misfit falls below this
    pub tolerance: f64,
    /// stabilization of the pseudo-Hessian division, as a fraction of the
    /// illumination maximum
    pub epsilon_frac: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for FwiConfig {
    fn default() -> Self {
        FwiConfig {
            max_iterations: 50,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_trials: 20,
            direction: DirectionMode::PseudoHessian,
            mask_halo: 2,
            tolerance: 1e-8,
            epsilon_frac: 1e-3,
            v_min: 300.0,
            v_max: 8000.0,
        }
    }
}

impl FwiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(WdriError::InvalidArgument(format!(
                "shrink factor must be in (0,1), got {}",
                self.shrink
            )));
        }
        for (name, v) in [
            ("sufficient_decrease", self.sufficient_decrease),
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

/// One line of an inversion history.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// 1/2 sum of squared residuals over all shots
    pub misfit: f64,
    /// misfit divided by 1/2 ||observed||^2
    pub normalized_misfit: f64,
    /// cumulative wave solves at the end of the iteration
    pub solves: u64,
    /// accepted step length (0 when no update was made)
    pub alpha: f64,
    pub model_rmse: Option<f64>,
}

/// Final state of an inversion run.
#[derive(Debug, Clone)]
pub struct InversionState {
    pub model: SlownessSquaredModel,
    pub history: Vec<IterationRecord>,
    /// true when the line search could not find a decreasing step
    pub stalled: bool,
}

/// delta_d = observed - P A(m)^-1 b for one shot (one forward solve).
pub fn residual(
    prop: &Propagator,
    model: &SlownessSquaredModel,
    wavelet: &Wavelet,
    acquisition: &Acquisition,
    shot: usize,
    observed: &ShotGather,
) -> Result<ShotGather> {
    let (_, predicted) = prop.forward(
        model,
        wavelet,
        acquisition.sources()[shot],
        acquisition,
        StorageMode::Full,
    )?;
    observed.sub(&predicted)
}

/// Exact discrete imaging sums for one shot: numerator sum_n udd[n] * v[n]
/// and illumination sum_n udd[n]^2, where udd is the second time difference
/// of the forward field over dt^2 (with u[-1] = 0). These are the exact
/// derivatives of the discrete misfit, so no dt weight appears.
pub(crate) fn imaging_sums(
    forward: &WavefieldMovie,
    adjoint: &WavefieldMovie,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if forward.frames.dim() != adjoint.frames.dim() {
        return Err(WdriError::ShapeMismatch(
            "forward and adjoint movies have different shapes".into(),
        ));
    }
    let (nt, nx, nz) = forward.frames.dim();
    let inv_dt2 = 1.0 / (forward.time.dt * forward.time.dt);
    let mut numer = Array2::<f64>::zeros((nx, nz));
    let mut illum = Array2::<f64>::zeros((nx, nz));
    for n in 0..nt.saturating_sub(1) {
        let next = forward.frames.index_axis(ndarray::Axis(0), n + 1);
        let cur = forward.frames.index_axis(ndarray::Axis(0), n);
        let v = adjoint.frames.index_axis(ndarray::Axis(0), n);
        if n == 0 {
            ndarray::Zip::from(&mut numer)
                .and(&mut illum)
                .and(&next)
                .and(&cur)
                .and(&v)
                .for_each(|num, il, &un, &uc, &vv| {
                    let udd = (un - 2.0 * uc) * inv_dt2;
                    *num += udd * vv;
                    *il += udd * udd;
                });
        } else {
            let prev = forward.frames.index_axis(ndarray::Axis(0), n - 1);
            ndarray::Zip::from(&mut numer)
                .and(&mut illum)
                .and(&next)
                .and(&cur)
                .and(&prev)
                .and(&v)
                .for_each(|num, il, &un, &uc, &up, &vv| {
                    let udd = (un - 2.0 * uc + up) * inv_dt2;
                    *num += udd * vv;
                    *il += udd * udd;
                });
        }
    }
    Ok((numer, illum))
}

/// Multi-shot misfit gradient and pseudo-Hessian. Returns
/// (gradient, illumination, misfit); two solves per shot. The gradient is
/// d(misfit)/dm of the fully discrete problem: sum_n udd[n] * v[n] with
/// v = adjoint(residual); the sign is pinned by the finite-difference test.
pub fn gradient(
    prop: &Propagator,
    model: &SlownessSquaredModel,
    wavelet: &Wavelet,
    acquisition: &Acquisition,
    observed: &[ShotGather],
) -> Result<(Array2<f64>, Array2<f64>, f64)> {
    check_shots(acquisition, observed)?;
    let grid = model.grid();
    // (correlation sum, illumination sum, misfit) per shot
    type ShotSums = (Array2<f64>, Array2<f64>, f64);
    let per_shot: Vec<Result<ShotSums>> = (0..acquisition.n_sources())
        .into_par_iter()
        .map(|s| {
            let (field, predicted) = prop.forward(
                model,
                wavelet,
                acquisition.sources()[s],
                acquisition,
                StorageMode::Full,
            )?;
            let movie = field.unwrap_full();
            let res = observed[s].sub(&predicted)?;
            let misfit = 0.5 * res.norm_squared();
            let v = prop.adjoint(model, &res, acquisition)?;
            let (numer, illum) = imaging_sums(&movie, &v)?;
            Ok((numer, illum, misfit))
        })
        .collect();
    let mut g = Array2::<f64>::zeros((grid.nx, grid.nz));
    let mut illum = Array2::<f64>::zeros((grid.nx, grid.nz));
    let mut misfit = 0.0;
    // fixed shot-order reduction for reproducibility
    for r in per_shot {
        let (numer, il, j) = r?;
        g += &numer;
        illum += &il;
        misfit += j;
    }
    Ok((g, illum, misfit))
}

/// delta_m = -g / (illumination + eps * max(illumination)).
pub fn descent_direction(
    gradient: &Array2<f64>,
    illumination: &Array2<f64>,
    epsilon_frac: f64,
) -> Result<Array2<f64>> {
    if gradient.dim() != illumination.dim() {
        return Err(WdriError::ShapeMismatch(
            "gradient and illumination shapes differ".into(),
        ));
    }
    let max_illum = illumination.iter().cloned().fold(0.0f64, f64::max);
    if max_illum <= 0.0 {
        return Err(WdriError::DegenerateInput(
            "illumination is identically zero".into(),
        ));
    }
    let eps = epsilon_frac * max_illum;
    Ok(ndarray::Zip::from(gradient)
        .and(illumination)
        .map_collect(|&g, &h| -g / (h + eps)))
}

/// Zero the direction in a Chebyshev-`halo` neighborhood of every source and
/// receiver node, suppressing the singular point-source imprint.
pub fn apply_mask(direction: &mut Array2<f64>, acquisition: &Acquisition, halo: usize) {
    let (nx, nz) = direction.dim();
    let mut nodes: Vec<(usize, usize)> = acquisition.receiver_indices().to_vec();
    for s in 0..acquisition.n_sources() {
        nodes.push(acquisition.source_index(s));
    }
    for (ci, cj) in nodes {
        let i0 = ci.saturating_sub(halo);
        let j0 = cj.saturating_sub(halo);
        for i in i0..=(ci + halo).min(nx - 1) {
            for j in j0..=(cj + halo).min(nz - 1) {
                direction[(i, j)] = 0.0;
            }
        }
    }
}

/// Total misfit at a model (one solve per shot).
pub fn total_misfit(
    prop: &Propagator,
    model: &SlownessSquaredModel,
    wavelet: &Wavelet,
    acquisition: &Acquisition,
    observed: &[ShotGather],
) -> Result<f64> {
    check_shots(acquisition, observed)?;
    let per_shot: Vec<Result<f64>> = (0..acquisition.n_sources())
        .into_par_iter()
        .map(|s| {
            let r = residual(prop, model, wavelet, acquisition, s, &observed[s])?;
            Ok(0.5 * r.norm_squared())
        })
        .collect();
    let mut total = 0.0;
    for r in per_shot {
        total += r?;
    }
    Ok(total)
}

/// Initial backtracking step: scale so the largest velocity change is 1% of
/// the [v_min, v_max] range.
fn initial_alpha(model: &SlownessSquaredModel, direction: &Array2<f64>, cfg: &FwiConfig) -> f64 {
    let m = model.field();
    let mut max_dv = 0.0f64;
    ndarray::Zip::from(m).and(direction).for_each(|&mc, &dc| {
        // dv/dm = -1/2 m^(-3/2)
        let dv = 0.5 * mc.powf(-1.5) * dc.abs();
        max_dv = max_dv.max(dv);
    });
    if max_dv == 0.0 {
        0.0
    } else {
        0.01 * (cfg.v_max - cfg.v_min) / max_dv
    }
}

/// Reference misfit 1/2 ||observed||^2 used for normalization.
pub fn reference_misfit(observed: &[ShotGather]) -> f64 {
    0.5 * observed.iter().map(|g| g.norm_squared()).sum::<f64>()
}

/// Reduced waveform inversion with backtracking line search. Misfit history
/// is monotone non-increasing; a failed line search sets the stall flag and
/// stops instead of erroring.
#[allow(clippy::too_many_arguments)]
pub fn fwi_invert(
    prop: &Propagator,
    config: &FwiConfig,
    wavelet: &Wavelet,
    acquisition: &Acquisition,
    observed: &[ShotGather],
    initial: &SlownessSquaredModel,
    truth: Option<&SlownessSquaredModel>,
    mut on_iteration: impl FnMut(&IterationRecord, &SlownessSquaredModel),
) -> Result<InversionState> {
    config.validate()?;
    check_shots(acquisition, observed)?;
    let reference = reference_misfit(observed).max(f64::MIN_POSITIVE);
    let mut model = initial.clone();
    let mut history = Vec::new();
    let mut stalled = false;

    for iteration in 0..config.max_iterations {
        let (g, illum, misfit) = gradient(prop, &model, wavelet, acquisition, observed)?;
        let normalized = misfit / reference;
        if normalized < config.tolerance {
            let record = record_of(iteration, misfit, normalized, prop, 0.0, &model, truth);
            on_iteration(&record, &model);
            history.push(record);
            break;
        }
        let mut direction = match config.direction {
            DirectionMode::Steepest => -&g,
            DirectionMode::PseudoHessian => descent_direction(&g, &illum, config.epsilon_frac)?,
        };
        apply_mask(&mut direction, acquisition, config.mask_halo);
        let slope: f64 = ndarray::Zip::from(&g)
            .and(&direction)
            .fold(0.0, |acc, &a, &b| acc + a * b);
        if slope >= 0.0 {
            stalled = true;
            let record = record_of(iteration, misfit, normalized, prop, 0.0, &model, truth);
            on_iteration(&record, &model);
            history.push(record);
            break;
        }
        let mut alpha = initial_alpha(&model, &direction, config);
        let mut accepted = None;
        for _ in 0..config.max_trials {
            let trial = model.updated_clipped(&(alpha * &direction), config.v_min, config.v_max)?;
            let trial_misfit = total_misfit(prop, &trial, wavelet, acquisition, observed)?;
            if trial_misfit <= misfit + config.sufficient_decrease * alpha * slope {
                accepted = Some((trial, trial_misfit, alpha));
                break;
            }
            alpha *= config.shrink;
        }
        match accepted {
            Some((next_model, next_misfit, a)) => {
                model = next_model;
                let record = record_of(
                    iteration,
                    next_misfit,
                    next_misfit / reference,
                    prop,
                    a,
                    &model,
                    truth,
                );
                on_iteration(&record, &model);
                history.push(record);
            }
            None => {
                stalled = true;
                let record = record_of(iteration, misfit, normalized, prop, 0.0, &model, truth);
                on_iteration(&record, &model);
                history.push(record);
                break;
            }
        }
    }
    Ok(InversionState {
        model,
        history,
        stalled,
    })
}

pub(crate) fn record_of(
    iteration: usize,
    misfit: f64,
    normalized: f64,
    prop: &Propagator,
    alpha: f64,
    model: &SlownessSquaredModel,
    truth: Option<&SlownessSquaredModel>,
) -> IterationRecord {
    IterationRecord {
        iteration,
        misfit,
        normalized_misfit: normalized,
        solves: prop.solve_count(),
        alpha,
        model_rmse: truth.and_then(|t| model.velocity_rmse(t).ok()),
    }
}

pub(crate) fn check_shots(acquisition: &Acquisition, observed: &[ShotGather]) -> Result<()> {
    if observed.len() != acquisition.n_sources() {
        return Err(WdriError::ShapeMismatch(format!(
            "{} observed gathers for {} sources",
            observed.len(),
            acquisition.n_sources()
        )));
    }
    for g in observed {
        if g.nr() != acquisition.n_receivers() {
            return Err(WdriError::ShapeMismatch(format!(
                "gather {} has {} traces, acquisition has {} receivers",
                g.shot_id,
                g.nr(),
                acquisition.n_receivers()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ricker, Grid2D, TimeAxis};
    use crate::propagator::AbsorbingConfig;

    fn tiny_setup() -> (Propagator, SlownessSquaredModel, Wavelet, Acquisition) {
        let grid = Grid2D::new(17, 17, 10.0, 10.0).unwrap();
        let v = 2000.0;
        let dt = 0.9 * 10.0 / (v * std::f64::consts::SQRT_2) * 0.9;
        let time = TimeAxis::new(120, dt).unwrap();
        let model = SlownessSquaredModel::homogeneous(grid.clone(), v).unwrap();
        let absorb = AbsorbingConfig {
            layer_width: 12,
            ..AbsorbingConfig::default()
        };
        let prop = Propagator::new(time, absorb);
        let wavelet = ricker(40.0, time, 1.5 / 40.0).unwrap();
        let acq = Acquisition::new(
            &grid,
            vec![(30.0, 80.0)],
            vec![(130.0, 40.0), (130.0, 120.0)],
        )
        .unwrap();
        (prop, model, wavelet, acq)
    }

    fn simulate(
        prop: &Propagator,
        model: &SlownessSquaredModel,
        wavelet: &Wavelet,
        acq: &Acquisition,
    ) -> Vec<ShotGather> {
        (0..acq.n_sources())
            .map(|s| {
                prop.forward(model, wavelet, acq.sources()[s], acq, StorageMode::Full)
                    .unwrap()
                    .1
            })
            .collect()
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let (prop, model, wavelet, acq) = tiny_setup();
        let observed = simulate(&prop, &model, &wavelet, &acq);
        let (g, illum, misfit) = gradient(&prop, &model, &wavelet, &acq, &observed).unwrap();
        assert!(misfit < 1e-20);
        assert!(g.iter().all(|&x| x.abs() < 1e-18));
        assert!(illum.iter().cloned().fold(0.0f64, f64::max) > 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (prop, truth, wavelet, acq) = tiny_setup();
        let observed = simulate(&prop, &truth, &wavelet, &acq);
        // perturbed start so the residual is nonzero
        let start = SlownessSquaredModel::homogeneous(truth.grid().clone(), 1900.0).unwrap();
        let (g, _, _) = gradient(&prop, &start, &wavelet, &acq, &observed).unwrap();
        let m0 = start.field()[(8, 8)];
        for &(ci, cj) in &[(8usize, 8usize), (6, 10), (11, 5)] {
            let h = 1e-6 * m0;
            let eval = |delta: f64| -> f64 {
                let mut f = start.field().clone();
                f[(ci, cj)] += delta;
                let m = SlownessSquaredModel::new(start.grid().clone(), f).unwrap();
                total_misfit(&prop, &m, &wavelet, &acq, &observed).unwrap()
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let rel = (g[(ci, cj)] - fd).abs() / fd.abs().max(1e-30);
            assert!(
                rel < 1e-5,
                "cell ({ci},{cj}): adjoint {} vs fd {fd}, rel {rel}",
                g[(ci, cj)]
            );
        }
    }

    #[test]
    fn descent_direction_scales_linearly() {
        let g = Array2::from_shape_fn((4, 4), |(i, j)| (i + j) as f64 - 3.0);
        let h = Array2::from_shape_fn((4, 4), |(i, j)| 1.0 + (i * j) as f64);
        let d1 = descent_direction(&g, &h, 1e-3).unwrap();
        let d2 = descent_direction(&(3.0 * &g), &h, 1e-3).unwrap();
        for (a, b) in d1.iter().zip(d2.iter()) {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn descent_direction_rejects_zero_illumination() {
        let g = Array2::ones((3, 3));
        let h = Array2::zeros((3, 3));
        assert!(matches!(
            descent_direction(&g, &h, 1e-3),
            Err(WdriError::DegenerateInput(_))
        ));
    }

    #[test]
    fn mask_zeros_halo_cells() {
        let (_, model, _, acq) = tiny_setup();
        let mut d = Array2::ones((model.grid().nx, model.grid().nz));
        apply_mask(&mut d, &acq, 2);
        let (si, sj) = acq.source_index(0);
        assert_eq!(d[(si, sj)], 0.0);
        assert_eq!(d[(si + 2, sj + 2)], 0.0);
        assert_eq!(d[(si + 3, sj)], 1.0);
    }

    #[test]
    fn truth_start_terminates_immediately() {
        let (prop, model, wavelet, acq) = tiny_setup();
        let observed = simulate(&prop, &model, &wavelet, &acq);
        let cfg = FwiConfig {
            max_iterations: 10,
            ..FwiConfig::default()
        };
        let state = fwi_invert(
            &prop,
            &cfg,
            &wavelet,
            &acq,
            &observed,
            &model,
            None,
            |_, _| {},
        )
        .unwrap();
        assert_eq!(state.history.len(), 1);
        assert_eq!(state.history[0].iteration, 0);
        assert!(state.history[0].normalized_misfit < 1e-10);
        assert!(!state.stalled);
    }

    #[test]
    fn misfit_history_is_non_increasing() {
        let (prop, truth, wavelet, acq) = tiny_setup();
        let observed = simulate(&prop, &truth, &wavelet, &acq);
        let start = SlownessSquaredModel::homogeneous(truth.grid().clone(), 1900.0).unwrap();
        let cfg = FwiConfig {
            max_iterations: 5,
            // keep clipped velocities inside the CFL-stable range for this dt
            v_min: 1500.0,
            v_max: 2200.0,
            ..FwiConfig::default()
        };
        let state = fwi_invert(
            &prop,
            &cfg,
            &wavelet,
            &acq,
            &observed,
            &start,
            Some(&truth),
            |_, _| {},
        )
        .unwrap();
        assert!(!state.history.is_empty());
        for pair in state.history.windows(2) {
            assert!(pair[1].misfit <= pair[0].misfit + 1e-12);
        }
    }
}
