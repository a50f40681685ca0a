//! Acceptance suite. Each test prints one `AC-n ...: PASS/FAIL` line
//! (visible with `cargo test --test acceptance -- --nocapture`) and then
//! asserts, so a red test always names its criterion.

use ndarray::{Array1, Array2, Array3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use wdri::dataspace::{
    apply_ggt, assemble_q_explicit, verify_band_structure, verify_norm_identity, DataVector,
};
use wdri::domain::{
    bandpass_ricker, build_camembert, build_checkerboard, line_positions, perimeter_positions,
    ricker, wavelet_halfwidth, Acquisition, CamembertSpec, CheckerboardSpec, Grid2D, ShotGather,
    SlownessSquaredModel, TimeAxis, Wavelet,
};
use wdri::dri::{
    dri_exact_data_update, dri_invert, dri_iteration, step_length, DriConfig, DriVariant, DualState,
};
use wdri::fwi::{fwi_invert, gradient, total_misfit, DirectionMode, FwiConfig};
use wdri::linalg::{cholesky_solve, power_iteration_max, power_iteration_min};
use wdri::propagator::{AbsorbingConfig, Propagator, StorageMode, WavefieldMovie};

fn report(name: &str, pass: bool, detail: &str) {
    println!("{name}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name} failed: {detail}");
}

/// Simulate observed data with a propagator built fresh from the same
/// configuration, so inversion-side solve counters start at zero.
fn simulate(
    time: TimeAxis,
    absorb: &AbsorbingConfig,
    model: &SlownessSquaredModel,
    wavelet: &Wavelet,
    acq: &Acquisition,
) -> Vec<ShotGather> {
    let prop = Propagator::new(time, *absorb);
    (0..acq.n_sources())
        .map(|s| {
            prop.forward_gather(model, wavelet, acq.sources()[s], acq)
                .unwrap()
        })
        .collect()
}

fn gently_heterogeneous(grid: &Grid2D, base: f64, swing: f64) -> SlownessSquaredModel {
    let v = Array2::from_shape_fn((grid.nx, grid.nz), |(i, j)| {
        base + swing * (((i * 13 + j * 7) % 10) as f64 / 9.0 - 0.5)
    });
    SlownessSquaredModel::from_velocity(grid.clone(), &v).unwrap()
}

#[test]
fn ac01_adjoint_consistency() {
    let grid = Grid2D::new(51, 51, 10.0, 10.0).unwrap();
    let model = gently_heterogeneous(&grid, 1850.0, 250.0);
    let dt = 0.9 * 10.0 / (2000.0 * std::f64::consts::SQRT_2) * 0.95;
    let time = TimeAxis::new(300, dt).unwrap();
    let prop = Propagator::new(
        time,
        AbsorbingConfig {
            layer_width: 20,
            ..AbsorbingConfig::default()
        },
    );
    let receivers = vec![(60.0, 40.0), (430.0, 80.0), (250.0, 460.0), (40.0, 300.0)];
    let acq = Acquisition::new(&grid, vec![(250.0, 250.0)], receivers).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let frames =
        Array3::from_shape_fn((time.nt, grid.nx, grid.nz), |_| rng.random_range(-1.0..1.0));
    let b = WavefieldMovie::new(grid.clone(), time, frames).unwrap();
    let traces = Array2::from_shape_fn((time.nt, acq.n_receivers()), |_| {
        rng.random_range(-1.0..1.0)
    });
    let d = ShotGather::new(0, time, traces).unwrap();

    let gb = prop.forward_volumetric_gather(&model, &b, &acq).unwrap();
    let gtd = prop.adjoint(&model, &d, &acq).unwrap();
    let lhs = gb.dot(&d).unwrap();
    let rhs: f64 = b
        .frames
        .iter()
        .zip(gtd.frames.iter())
        .map(|(x, y)| x * y)
        .sum();
    let rel = (lhs - rhs).abs() / (lhs.abs().max(rhs.abs()).max(1e-30));
    report(
        "AC-1 adjoint consistency",
        rel < 1e-8,
        &format!("dot-test relative error {rel:.3e} (threshold 1e-8)"),
    );
}

#[test]
fn ac02_gradient_matches_finite_differences() {
    let grid = Grid2D::new(21, 21, 10.0, 10.0).unwrap();
    let dt = 0.9 * 10.0 / (2000.0 * std::f64::consts::SQRT_2) * 0.9;
    let time = TimeAxis::new(200, dt).unwrap();
    let absorb = AbsorbingConfig {
        layer_width: 15,
        ..AbsorbingConfig::default()
    };
    let prop = Propagator::new(time, absorb);
    let wavelet = ricker(25.0, time, 1.5 / 25.0).unwrap();
    let truth = gently_heterogeneous(&grid, 1950.0, 100.0);
    let acq = Acquisition::new(
        &grid,
        vec![(100.0, 30.0)],
        vec![(30.0, 170.0), (100.0, 170.0), (170.0, 170.0), (170.0, 60.0)],
    )
    .unwrap();
    let observed = simulate(time, &absorb, &truth, &wavelet, &acq);
    let start = SlownessSquaredModel::homogeneous(grid.clone(), 1900.0).unwrap();
    let (g, _, _) = gradient(&prop, &start, &wavelet, &acq, &observed).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let m0 = start.field()[(10, 10)];
    let h = 1e-6 * m0;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let ci = rng.random_range(3..grid.nx - 3);
        let cj = rng.random_range(3..grid.nz - 3);
        let eval = |delta: f64| -> f64 {
            let mut f = start.field().clone();
            f[(ci, cj)] += delta;
            let m = SlownessSquaredModel::new(grid.clone(), f).unwrap();
            total_misfit(&prop, &m, &wavelet, &acq, &observed).unwrap()
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        let rel = (g[(ci, cj)] - fd).abs() / fd.abs().max(1e-30);
        worst = worst.max(rel);
    }
    report(
        "AC-2 gradient vs finite differences",
        worst < 1e-4,
        &format!("worst relative error over 5 random interior cells {worst:.3e} (threshold 1e-4)"),
    );
}

#[test]
fn ac03_four_solves_per_shot_per_dri_iteration() {
    let grid = Grid2D::new(31, 31, 10.0, 10.0).unwrap();
    let dt = 0.9 * 10.0 / (2000.0 * std::f64::consts::SQRT_2) * 0.9;
    let time = TimeAxis::new(160, dt).unwrap();
    let absorb = AbsorbingConfig {
        layer_width: 15,
        ..AbsorbingConfig::default()
    };
    let wavelet = ricker(25.0, time, 1.5 / 25.0).unwrap();
    let truth = gently_heterogeneous(&grid, 1950.0, 100.0);
    let acq = Acquisition::new(
        &grid,
        vec![(60.0, 40.0), (240.0, 40.0)],
        vec![
            (40.0, 260.0),
            (110.0, 260.0),
            (190.0, 260.0),
            (260.0, 260.0),
        ],
    )
    .unwrap();
    let observed = simulate(time, &absorb, &truth, &wavelet, &acq);
    let start = SlownessSquaredModel::homogeneous(grid.clone(), 1900.0).unwrap();

    let prop = Propagator::new(time, absorb);
    let config = DriConfig {
        max_iterations: 10,
        variant: DriVariant::GradientDescent,
        tolerance: 1e-14,
        v_min: 1500.0,
        v_max: 2200.0,
        ..DriConfig::default()
    };
    let mut counts = Vec::new();
    let state = dri_invert(
        &prop,
        &config,
        &wavelet,
        &acq,
        &observed,
        &start,
        None,
        |r, _| counts.push(r.solves),
    )
    .unwrap();
    let per_iter = 4 * acq.n_sources() as u64;
    let mut ok = state.history.len() == 10 && counts.first() == Some(&per_iter);
    for w in counts.windows(2) {
        ok &= w[1] - w[0] == per_iter;
    }
    report(
        "AC-3 solve-count ledger",
        ok,
        &format!(
            "{} iterations, solve counts {counts:?} (expected steps of {per_iter} = 4 x {} shots)",
            state.history.len(),
            acq.n_sources()
        ),
    );
}

#[test]
fn ac04_q_matrix_structure() {
    // Homogeneous 2000 m/s, 5 receivers 200 m apart, 251 time samples.
    let dx = 20.0;
    let grid = Grid2D::new(81, 41, dx, dx).unwrap();
    let model = SlownessSquaredModel::homogeneous(grid.clone(), 2000.0).unwrap();
    let time = TimeAxis::new(251, 0.002).unwrap();
    let positions: Vec<(f64, f64)> = (0..5).map(|k| (400.0 + 200.0 * k as f64, 400.0)).collect();
    let acq = Acquisition::new(&grid, vec![positions[0]], positions).unwrap();
    let prop = Propagator::new(
        time,
        AbsorbingConfig {
            layer_width: 60,
            ..AbsorbingConfig::default()
        },
    );
    let q = assemble_q_explicit(&prop, &model, &acq, time).unwrap();

    // (a) symmetry, recorded before the (Q + Q^T)/2 symmetrization
    let sym_ok = q.asymmetry < 1e-8;

    // (b) positive semidefiniteness via Ritz values of the dense matrix
    let n = q.data.nrows();
    let matvec = |v: &[f64]| -> wdri::Result<Vec<f64>> {
        let x = Array1::from_vec(v.to_vec());
        Ok(q.data.dot(&x).to_vec())
    };
    let lam_max = power_iteration_max(matvec, n, 200, 404).unwrap();
    let lam_min = power_iteration_min(matvec, n, 2.0 * lam_max, 200, 405).unwrap();
    let psd_ok = lam_min >= -1e-8 * lam_max;

    // (c) band structure: energy outside the travel-time band, widened by the
    // half-width of the band-limited survey wavelet and two time steps
    let wavelet = bandpass_ricker(2.5, 5.0, time).unwrap();
    let hw = wavelet_halfwidth(&wavelet, time.dt, 0.01);
    let band = verify_band_structure(&q, &acq, 2000.0, hw, 0.01).unwrap();
    let worst = band
        .blocks
        .iter()
        .map(|b| b.outside_fraction)
        .fold(0.0f64, f64::max);

    report(
        "AC-4 Q-matrix structure",
        sym_ok && psd_ok && band.pass,
        &format!(
            "asymmetry {:.2e} (<1e-8: {sym_ok}), Ritz min {lam_min:.3e} vs max {lam_max:.3e} \
             (PSD: {psd_ok}), worst block energy outside band {:.4} (<0.01: {})",
            q.asymmetry, worst, band.pass
        ),
    );
}

#[test]
fn ac05_camembert_discrimination() {
    // 68 x 85 grid; the anomaly delays the through-going arrival by more than
    // half a period of the 10 Hz wavelet, which is the cycle-skipping regime.
    // The record is long enough for the corner-to-corner path (~0.95 s).
    let spec = CamembertSpec {
        extent_x: 67.0 * 35.5,
        extent_z: 84.0 * 35.5,
        dx: 35.5,
        dz: 35.5,
        anomaly_velocity: 5000.0,
        radius: 900.0,
        ..CamembertSpec::default()
    };
    let (truth, _) = build_camembert(&spec).unwrap();
    let grid = truth.grid().clone();
    let (ex, ez) = (grid.extent_x(), grid.extent_z());
    let sources = line_positions((0.0, 0.0), (0.0, ez), 7);
    let receivers = line_positions((ex, 0.0), (ex, ez), 85);
    let acq = Acquisition::new(&grid, sources, receivers).unwrap();

    let time = TimeAxis::new(400, 0.004).unwrap();
    let absorb = AbsorbingConfig::default();
    let wavelet = ricker(10.0, time, 1.5 / 10.0).unwrap();
    let observed = simulate(time, &absorb, &truth, &wavelet, &acq);
    let start = SlownessSquaredModel::homogeneous(grid.clone(), 4000.0).unwrap();

    let prop_fwi = Propagator::new(time, absorb);
    let fwi_cfg = FwiConfig {
        max_iterations: 100,
        direction: DirectionMode::PseudoHessian,
        v_min: 3200.0,
        v_max: 5500.0,
        ..FwiConfig::default()
    };
    let fwi = fwi_invert(
        &prop_fwi,
        &fwi_cfg,
        &wavelet,
        &acq,
        &observed,
        &start,
        Some(&truth),
        |_, _| {},
    )
    .unwrap();

    let prop_dri = Propagator::new(time, absorb);
    let dri_cfg = DriConfig {
        max_iterations: 100,
        variant: DriVariant::GradientDescent,
        v_min: 3200.0,
        v_max: 5500.0,
        ..DriConfig::default()
    };
    let dri = dri_invert(
        &prop_dri,
        &dri_cfg,
        &wavelet,
        &acq,
        &observed,
        &start,
        Some(&truth),
        |_, _| {},
    )
    .unwrap();

    let initial = dri.history.first().unwrap().normalized_misfit;
    let final_dri = dri.history.last().unwrap().normalized_misfit;
    let rmse_dri = dri.model.velocity_rmse(&truth).unwrap();
    let rmse_fwi = fwi.model.velocity_rmse(&truth).unwrap();
    let misfit_ok = final_dri < 0.1 * initial;
    let rmse_ok = rmse_dri < 0.5 * rmse_fwi;
    report(
        "AC-5 Camembert discrimination",
        misfit_ok && rmse_ok,
        &format!(
            "DRI misfit {final_dri:.3e} vs 0.1 x initial {initial:.3e} ({misfit_ok}); \
             model RMSE m/s: DRI {rmse_dri:.1} vs FWI {rmse_fwi:.1}, ratio {:.2} (<0.5: {rmse_ok})",
            rmse_dri / rmse_fwi
        ),
    );
}

#[test]
fn ac06_checkerboard_discrimination() {
    let spec = CheckerboardSpec {
        nx: 51,
        nz: 51,
        dx: 20.0,
        dz: 20.0,
        background_velocity: 1500.0,
        tile_velocity: 1800.0,
        tile_size: 200.0,
    };
    let truth = build_checkerboard(&spec).unwrap();
    let grid = truth.grid().clone();
    let sources = perimeter_positions(&grid, 40.0, 24);
    let receivers = perimeter_positions(&grid, 20.0, 48);
    let acq = Acquisition::new(&grid, sources, receivers).unwrap();

    let time = TimeAxis::new(200, 0.005).unwrap();
    let absorb = AbsorbingConfig::default();
    let wavelet = ricker(12.0, time, 1.5 / 12.0).unwrap();
    let observed = simulate(time, &absorb, &truth, &wavelet, &acq);
    let start = SlownessSquaredModel::homogeneous(grid.clone(), spec.background_velocity).unwrap();

    let prop_fwi = Propagator::new(time, absorb);
    let fwi_cfg = FwiConfig {
        max_iterations: 150,
        direction: DirectionMode::PseudoHessian,
        v_min: 1200.0,
        v_max: 2000.0,
        ..FwiConfig::default()
    };
    let fwi = fwi_invert(
        &prop_fwi,
        &fwi_cfg,
        &wavelet,
        &acq,
        &observed,
        &start,
        Some(&truth),
        |_, _| {},
    )
    .unwrap();

    let prop_dri = Propagator::new(time, absorb);
    let dri_cfg = DriConfig {
        max_iterations: 150,
        variant: DriVariant::GradientDescent,
        v_min: 1200.0,
        v_max: 2000.0,
        ..DriConfig::default()
    };
    let dri = dri_invert(
        &prop_dri,
        &dri_cfg,
        &wavelet,
        &acq,
        &observed,
        &start,
        Some(&truth),
        |_, _| {},
    )
    .unwrap();

    // A perturbed cell counts as recovered when the estimate moved toward the
    // tile velocity by at least 1% of the true perturbation. Cells inside the
    // source/receiver mask halo are frozen by both solvers (neither method can
    // move them), so the score is taken over the updatable perturbed cells.
    let mut updatable = ndarray::Array2::<f64>::ones((grid.nx, grid.nz));
    wdri::fwi::apply_mask(&mut updatable, &acq, fwi_cfg.mask_halo);
    let sign_fraction = |model: &SlownessSquaredModel| -> f64 {
        let v = model.velocity();
        let threshold = 0.01 * (spec.tile_velocity - spec.background_velocity);
        let mut total = 0usize;
        let mut correct = 0usize;
        for i in 0..grid.nx {
            for j in 0..grid.nz {
                if spec.is_perturbed(i, j) && updatable[(i, j)] != 0.0 {
                    total += 1;
                    if v[(i, j)] - spec.background_velocity > threshold {
                        correct += 1;
                    }
                }
            }
        }
        correct as f64 / total as f64
    };
    let frac_dri = sign_fraction(&dri.model);
    let frac_fwi = sign_fraction(&fwi.model);
    report(
        "AC-6 checkerboard discrimination",
        frac_dri >= 0.80 && frac_fwi < 0.55,
        &format!(
            "correct perturbation sign: DRI {:.1}% (>=80), FWI {:.1}% (<55)",
            100.0 * frac_dri,
            100.0 * frac_fwi
        ),
    );
}

/// Shared 31x31 instance for AC-7/AC-8: a true residual from a perturbed
/// start, mu = 0.1 x an estimate of the largest eigenvalue of G G^T.
fn norm_identity_instance() -> (
    Propagator,
    SlownessSquaredModel,
    Acquisition,
    ShotGather,
    f64,
) {
    let grid = Grid2D::new(31, 31, 10.0, 10.0).unwrap();
    let dt = 0.9 * 10.0 / (2000.0 * std::f64::consts::SQRT_2) * 0.9;
    let time = TimeAxis::new(128, dt).unwrap();
    let absorb = AbsorbingConfig {
        layer_width: 15,
        ..AbsorbingConfig::default()
    };
    let wavelet = ricker(25.0, time, 1.5 / 25.0).unwrap();
    let truth = gently_heterogeneous(&grid, 1980.0, 60.0);
    let model = SlownessSquaredModel::homogeneous(grid.clone(), 1940.0).unwrap();
    let acq = Acquisition::new(
        &grid,
        vec![(150.0, 40.0)],
        vec![(40.0, 260.0), (150.0, 260.0), (260.0, 260.0)],
    )
    .unwrap();
    let observed = simulate(time, &absorb, &truth, &wavelet, &acq);
    let prop = Propagator::new(time, absorb);
    let predicted = prop
        .forward_gather(&model, &wavelet, acq.sources()[0], &acq)
        .unwrap();
    let r = observed[0].sub(&predicted).unwrap();

    let n = time.nt * acq.n_receivers();
    let matvec = |v: &[f64]| -> wdri::Result<Vec<f64>> {
        let g = DataVector {
            time,
            nr: acq.n_receivers(),
            values: v.to_vec(),
        }
        .to_gather(0);
        let out = apply_ggt(&prop, &model, &g, &acq)?;
        Ok(DataVector::from_gather(&out).values)
    };
    let lam_max = power_iteration_max(matvec, n, 60, 707).unwrap();
    let mu = 0.1 * lam_max;
    (prop, model, acq, r, mu)
}

#[test]
fn ac07_norm_identity() {
    let (prop, model, acq, r, mu) = norm_identity_instance();
    let rep = verify_norm_identity(&prop, &model, &r, &acq, mu, 1e-10, 4000).unwrap();
    report(
        "AC-7 norm identity",
        rep.relative_gap < 1e-6,
        &format!(
            "lhs {:.6e} vs rhs {:.6e}, relative gap {:.3e} (threshold 1e-6, CG {} iterations)",
            rep.lhs, rep.rhs, rep.relative_gap, rep.cg.iterations
        ),
    );
}

#[test]
fn ac08_exact_vs_approximate_data_update() {
    let (prop, model, acq, r, mu) = norm_identity_instance();

    // matrix-free CG solve of (G G^T + mu I) dy = dd_r
    let (dy, _) = dri_exact_data_update(&prop, &model, &r, &acq, mu, 1e-10, 4000).unwrap();
    let dy_v = DataVector::from_gather(&dy).values;

    // dense oracle: assemble Q, Cholesky-solve (Q + mu I) dd_e = mu dd_r
    let q = assemble_q_explicit(&prop, &model, &acq, prop.time()).unwrap();
    let n = q.data.nrows();
    let mut a = q.data.clone();
    for i in 0..n {
        a[(i, i)] += mu;
    }
    let r_v = DataVector::from_gather(&r).values;
    let rhs: Vec<f64> = r_v.iter().map(|x| mu * x).collect();
    let dde_dense = cholesky_solve(&a, &rhs).unwrap();
    let dde_cg: Vec<f64> = dy_v.iter().map(|x| mu * x).collect();
    let num: f64 = dde_dense
        .iter()
        .zip(dde_cg.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = dde_dense.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rel = num / den.max(1e-30);

    // cosine similarity between the gradient-descent increment alpha*dd_r and
    // the exact increment at iteration 1
    let qr = apply_ggt(&prop, &model, &r, &acq).unwrap();
    let alpha = step_length(&qr, &r).unwrap();
    let grad_inc: Vec<f64> = r_v.iter().map(|x| alpha * x).collect();
    let dot: f64 = grad_inc.iter().zip(dy_v.iter()).map(|(a, b)| a * b).sum();
    let na: f64 = grad_inc.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = dy_v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cosine = dot / (na * nb).max(1e-30);

    report(
        "AC-8 exact vs approximate data update",
        rel < 1e-6 && cosine > 0.9,
        &format!(
            "dense Cholesky vs matrix-free CG relative difference {rel:.3e} (<1e-6); \
             cosine(alpha x residual, exact increment) {cosine:.4} (>0.9)"
        ),
    );
}

#[test]
fn ac09_fixed_point_at_the_true_model() {
    let grid = Grid2D::new(31, 31, 10.0, 10.0).unwrap();
    let dt = 0.9 * 10.0 / (2000.0 * std::f64::consts::SQRT_2) * 0.9;
    let time = TimeAxis::new(160, dt).unwrap();
    let absorb = AbsorbingConfig {
        layer_width: 15,
        ..AbsorbingConfig::default()
    };
    let wavelet = ricker(25.0, time, 1.5 / 25.0).unwrap();
    let truth = gently_heterogeneous(&grid, 1950.0, 100.0);
    let acq = Acquisition::new(
        &grid,
        vec![(60.0, 40.0), (240.0, 40.0)],
        vec![(40.0, 260.0), (150.0, 260.0), (260.0, 260.0)],
    )
    .unwrap();
    let observed = simulate(time, &absorb, &truth, &wavelet, &acq);

    let prop = Propagator::new(time, absorb);
    let fwi_cfg = FwiConfig {
        max_iterations: 5,
        v_min: 1500.0,
        v_max: 2200.0,
        ..FwiConfig::default()
    };
    let fwi = fwi_invert(
        &prop,
        &fwi_cfg,
        &wavelet,
        &acq,
        &observed,
        &truth,
        Some(&truth),
        |_, _| {},
    )
    .unwrap();
    let fwi_ok = fwi.history.len() == 1
        && fwi.history[0].iteration == 0
        && fwi.history[0].misfit == 0.0
        && fwi.model.velocity_rmse(&truth).unwrap() == 0.0;

    let prop = Propagator::new(time, absorb);
    let dri_cfg = DriConfig {
        max_iterations: 5,
        v_min: 1500.0,
        v_max: 2200.0,
        ..DriConfig::default()
    };
    let dri = dri_invert(
        &prop,
        &dri_cfg,
        &wavelet,
        &acq,
        &observed,
        &truth,
        Some(&truth),
        |_, _| {},
    )
    .unwrap();
    let dri_ok = dri.history.len() == 1
        && dri.history[0].iteration == 0
        && dri.history[0].misfit == 0.0
        && dri.model.velocity_rmse(&truth).unwrap() == 0.0;

    report(
        "AC-9 fixed point",
        fwi_ok && dri_ok,
        &format!(
            "starting at the data-generating model: FWI stops at iteration 0 with zero \
             residual and zero update ({fwi_ok}); DRI likewise ({dri_ok})"
        ),
    );
}

#[test]
fn ac10_storage_mode_equivalence() {
    let grid = Grid2D::new(51, 51, 10.0, 10.0).unwrap();
    let dt = 0.9 * 10.0 / (2000.0 * std::f64::consts::SQRT_2) * 0.9;
    let time = TimeAxis::new(220, dt).unwrap();
    let absorb = AbsorbingConfig {
        layer_width: 20,
        ..AbsorbingConfig::default()
    };
    let wavelet = ricker(20.0, time, 1.5 / 20.0).unwrap();
    let truth = gently_heterogeneous(&grid, 1950.0, 100.0);
    let acq = Acquisition::new(
        &grid,
        vec![(100.0, 60.0), (400.0, 60.0)],
        vec![
            (60.0, 440.0),
            (160.0, 440.0),
            (250.0, 440.0),
            (340.0, 440.0),
            (440.0, 440.0),
        ],
    )
    .unwrap();
    let observed = simulate(time, &absorb, &truth, &wavelet, &acq);
    let start = SlownessSquaredModel::homogeneous(grid.clone(), 1900.0).unwrap();
    let prop = Propagator::new(time, absorb);

    let run = |storage: StorageMode| -> SlownessSquaredModel {
        let config = DriConfig {
            max_iterations: 1,
            storage,
            v_min: 1500.0,
            v_max: 2200.0,
            ..DriConfig::default()
        };
        let mut dual = DualState::new(&acq, time);
        dri_iteration(&prop, &config, &wavelet, &acq, &observed, &start, &mut dual)
            .unwrap()
            .model
    };
    let full = run(StorageMode::Full);
    let boundary = run(StorageMode::Boundary);

    let update_scale = full
        .field()
        .iter()
        .zip(start.field().iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let diff = full
        .field()
        .iter()
        .zip(boundary.field().iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let rel = diff / update_scale.max(1e-30);
    report(
        "AC-10 storage-mode equivalence",
        update_scale > 0.0 && rel < 1e-6,
        &format!(
            "iteration-1 updates: max |full - boundary| = {diff:.3e}, relative to the \
             update magnitude {update_scale:.3e} -> {rel:.3e} (threshold 1e-6)"
        ),
    );
}
