//! Data-space operators: the matrix-free receiver-side correlation operator
//! G G^T, its explicit dense assembly Q with band-structure analysis, and the
//! weighted-norm identity verifier
//! (1/2mu)||dd_e||^2_Q = (mu/2)||dd_r||^2_{Q^-1} with Q = G G^T + mu I.

use ndarray::Array2;
use rayon::prelude::*;

use crate::domain::{Acquisition, Position, ShotGather, SlownessSquaredModel, TimeAxis};
use crate::error::{Result, WdriError};
use crate::linalg::{self, CgOutcome};
use crate::propagator::Propagator;

/// Flattened per-shot trace matrix with shape metadata. Layout is
/// receiver-major: index = r * nt + t, so the dense Q decomposes into
/// receiver-pair blocks of size nt x nt.
#[derive(Debug, Clone, PartialEq)]
pub struct DataVector {
    pub time: TimeAxis,
    pub nr: usize,
    pub values: Vec<f64>,
}

impl DataVector {
    pub fn from_gather(gather: &ShotGather) -> DataVector {
        let nt = gather.time.nt;
        let nr = gather.nr();
        let mut values = vec![0.0; nt * nr];
        for r in 0..nr {
            for t in 0..nt {
                values[r * nt + t] = gather.traces[(t, r)];
            }
        }
        DataVector {
            time: gather.time,
            nr,
            values,
        }
    }

    pub fn to_gather(&self, shot_id: usize) -> ShotGather {
        let nt = self.time.nt;
        let mut traces = Array2::zeros((nt, self.nr));
        for r in 0..self.nr {
            for t in 0..nt {
                traces[(t, r)] = self.values[r * nt + t];
            }
        }
        ShotGather {
            shot_id,
            time: self.time,
            traces,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Apply G G^T = P A^-1 A^-T P^T to a gather: one adjoint solve (back
/// propagation of the traces) followed by one volumetric forward solve of the
/// resulting field, sampled at the receivers. Exactly symmetric positive
/// semidefinite because the two solves are discrete transposes.
pub fn apply_ggt(
    prop: &Propagator,
    model: &SlownessSquaredModel,
    v: &ShotGather,
    acquisition: &Acquisition,
) -> Result<ShotGather> {
    let w = prop.adjoint(model, v, acquisition)?;
    prop.forward_volumetric_gather(model, &w, acquisition)
}

/// Dense symmetric realization of G G^T.
#[derive(Debug, Clone)]
pub struct QMatrix {
    pub time: TimeAxis,
    pub nr: usize,
    /// (nt*nr) x (nt*nr), symmetrized as (Q + Q^T)/2
    pub data: Array2<f64>,
    /// max |Q - Q^T| / max |Q| before symmetrization
    pub asymmetry: f64,
}

/// Hard cap on explicit assembly size (columns = solve pairs).
pub const Q_COLUMN_GUARD: usize = 4096;

/// Build Q column by column: column j is apply_ggt(e_j). Columns run in
/// parallel; each costs two wave solves.
pub fn assemble_q_explicit(
    prop: &Propagator,
    model: &SlownessSquaredModel,
    acquisition: &Acquisition,
    time: TimeAxis,
) -> Result<QMatrix> {
    if time.nt != prop.time().nt {
        return Err(WdriError::ShapeMismatch(
            "requested time axis differs from the solver time axis".into(),
        ));
    }
    let nt = time.nt;
    let nr = acquisition.n_receivers();
    let n = nt * nr;
    if n > Q_COLUMN_GUARD {
        return Err(WdriError::SizeGuard {
            requested: n,
            guard: Q_COLUMN_GUARD,
        });
    }
    let columns: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut basis = DataVector {
                time,
                nr,
                values: vec![0.0; n],
            };
            basis.values[j] = 1.0;
            let out = apply_ggt(prop, model, &basis.to_gather(0), acquisition)?;
            Ok(DataVector::from_gather(&out).values)
        })
        .collect();
    let mut raw = Array2::<f64>::zeros((n, n));
    for (j, col) in columns.into_iter().enumerate() {
        let col = col?;
        for i in 0..n {
            raw[(i, j)] = col[i];
        }
    }
    let max_abs = raw.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((raw[(i, j)] - raw[(j, i)]).abs());
        }
    }
    let asymmetry = if max_abs > 0.0 { asym / max_abs } else { 0.0 };
    let data = 0.5 * (&raw + &raw.t());
    Ok(QMatrix {
        time,
        nr,
        data,
        asymmetry,
    })
}

/// Maximum time shift between receivers xi and xj for a medium of speed c:
/// ||xi - xj||_2 / c (backward triangle inequality on travel times).
pub fn band_bound(xi: Position, xj: Position, c: f64) -> f64 {
    ((xi.0 - xj.0).powi(2) + (xi.1 - xj.1).powi(2)).sqrt() / c
}

/// Band-conformance result for one receiver-pair block of Q.
#[derive(Debug, Clone)]
pub struct BlockReport {
    pub receiver_i: usize,
    pub receiver_j: usize,
    /// band half-width in seconds (bound + wavelet half-width + 2 dt)
    pub max_shift: f64,
    /// fraction of the block's energy outside the band
    pub outside_fraction: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct BandReport {
    pub blocks: Vec<BlockReport>,
    pub threshold: f64,
    pub pass: bool,
}

/// Check that each nt x nt receiver-pair block of Q concentrates its energy
/// in the predicted band |t - tau| <= band_bound + halfwidth + 2 dt. Assumes
/// a homogeneous medium of speed `c` (the bound is a straight-ray travel
/// time argument); `wavelet_halfwidth` widens the band because discrete
/// sources are band-limited rather than impulsive.
pub fn verify_band_structure(
    q: &QMatrix,
    acquisition: &Acquisition,
    c: f64,
    wavelet_halfwidth: f64,
    threshold: f64,
) -> Result<BandReport> {
    if acquisition.n_receivers() != q.nr {
        return Err(WdriError::ShapeMismatch(format!(
            "Q has {} receivers, acquisition has {}",
            q.nr,
            acquisition.n_receivers()
        )));
    }
    if !(c > 0.0) {
        return Err(WdriError::InvalidArgument(format!(
            "medium speed must be positive, got {c}"
        )));
    }
    let nt = q.time.nt;
    let dt = q.time.dt;
    let receivers = acquisition.receivers();
    let mut blocks = Vec::with_capacity(q.nr * q.nr);
    let mut pass = true;
    for i in 0..q.nr {
        for j in 0..q.nr {
            let max_shift =
                band_bound(receivers[i], receivers[j], c) + wavelet_halfwidth + 2.0 * dt;
            let mut inside = 0.0;
            let mut outside = 0.0;
            for t in 0..nt {
                for tau in 0..nt {
                    let e = q.data[(i * nt + t, j * nt + tau)].powi(2);
                    let shift = (t as f64 - tau as f64).abs() * dt;
                    if shift <= max_shift {
                        inside += e;
                    } else {
                        outside += e;
                    }
                }
            }
            let total = inside + outside;
            let outside_fraction = if total > 0.0 { outside / total } else { 0.0 };
            let block_pass = outside_fraction < threshold;
            pass &= block_pass;
            blocks.push(BlockReport {
                receiver_i: i,
                receiver_j: j,
                max_shift,
                outside_fraction,
                pass: block_pass,
            });
        }
    }
    Ok(BandReport {
        blocks,
        threshold,
        pass,
    })
}

/// Result of the weighted-norm identity check.
#[derive(Debug, Clone)]
pub struct NormIdentityReport {
    /// (1/2mu) dd_e^T (G G^T + mu I) dd_e
    pub lhs: f64,
    /// (mu/2) dd_r^T (G G^T + mu I)^-1 dd_r
    pub rhs: f64,
    pub relative_gap: f64,
    pub cg: CgOutcome,
}

/// Solve (G G^T + mu I) dd_e = mu dd_r by matrix-free CG and evaluate both
/// sides of the weighted-norm identity. In exact arithmetic they agree; the
/// gap measures solver accuracy.
pub fn verify_norm_identity(
    prop: &Propagator,
    model: &SlownessSquaredModel,
    r: &ShotGather,
    acquisition: &Acquisition,
    mu: f64,
    cg_tol: f64,
    cg_max_iter: usize,
) -> Result<NormIdentityReport> {
    if !(mu > 0.0) {
        return Err(WdriError::InvalidArgument(format!(
            "mu must be positive, got {mu}"
        )));
    }
    let rv = DataVector::from_gather(r);
    let n = rv.len();
    let shape = (rv.time, rv.nr);
    let apply = |x: &[f64]| -> Result<Vec<f64>> {
        let xg = DataVector {
            time: shape.0,
            nr: shape.1,
            values: x.to_vec(),
        }
        .to_gather(r.shot_id);
        let qx = apply_ggt(prop, model, &xg, acquisition)?;
        let qv = DataVector::from_gather(&qx);
        Ok((0..n).map(|i| qv.values[i] + mu * x[i]).collect())
    };
    let b: Vec<f64> = rv.values.iter().map(|&x| mu * x).collect();
    let (dde, cg) = linalg::conjugate_gradient(apply, &b, cg_tol, cg_max_iter)?;

    let q_dde = {
        let g = DataVector {
            time: shape.0,
            nr: shape.1,
            values: dde.clone(),
        }
        .to_gather(r.shot_id);
        let qx = apply_ggt(prop, model, &g, acquisition)?;
        DataVector::from_gather(&qx).values
    };
    let mut lhs = 0.0;
    for i in 0..n {
        lhs += dde[i] * (q_dde[i] + mu * dde[i]);
    }
    lhs /= 2.0 * mu;
    // Q^-1 dd_r = dd_e / mu, so the right side is (1/2) dd_r^T dd_e
    let rhs = 0.5 * linalg::dot(&rv.values, &dde);
    let scale = lhs.abs().max(rhs.abs());
    let relative_gap = if scale > 0.0 {
        (lhs - rhs).abs() / scale
    } else {
        0.0
    };
    Ok(NormIdentityReport {
        lhs,
        rhs,
        relative_gap,
        cg,
    })
}
