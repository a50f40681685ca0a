//! Batch command-line runner: build benchmark models, simulate data, run
//! inversions, assemble the data-space operator, and compare model files.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 numerical precondition
//! (stability/divergence), 4 inversion stall.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use wdri::dataspace::{assemble_q_explicit, verify_band_structure, QMatrix};
use wdri::domain::{
    build_camembert, build_checkerboard, cfl_max_dt, wavelet_halfwidth, Acquisition, CamembertSpec,
    CheckerboardSpec, Grid2D, Position, ShotGather, SlownessSquaredModel, TimeAxis,
};
use wdri::dri::{dri_invert, DriVariant};
use wdri::fwi::{fwi_invert, IterationRecord};
use wdri::io::{
    append_misfit_log, data_dir, parse_camembert_spec, parse_checkerboard_spec, parse_config,
    read_gather, read_grid, shot_file_name, write_gather, write_grid, GeometrySpec, GridKind,
    MisfitLogRecord, RunConfig,
};
use wdri::propagator::Propagator;
use wdri::{Result, WdriError};

#[derive(Parser)]
#[command(
    name = "wdri",
    version,
    about = "2-D acoustic waveform inversion toolkit"
)]
struct Cli {
    /// Cap the worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Recorded in provenance sidecars; all commands are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Camembert,
    Checkerboard,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Fwi,
    Dri,
    DriExact,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic benchmark model grid (plus a sidecar spec echo).
    MakeModel {
        #[arg(long)]
        kind: ModelKind,
        /// Optional spec file overriding the built-in defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the wave equation in a model and write one gather per shot.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: $WDRI_DATA_DIR or `.`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an inversion; writes snapshots, the final model, and a misfit log.
    Invert {
        #[arg(long)]
        method: Method,
        /// Directory of observed gathers (shot_0000.wds, ...).
        #[arg(long)]
        data: PathBuf,
        /// Initial model grid.
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// True model; adds a model-RMSE column to the misfit log.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Assemble the dense data-space operator and check its band structure.
    Qmatrix {
        #[arg(long)]
        model: PathBuf,
        /// Receiver layout, e.g. "line 0,0 800,0 5" or "points 0,0 100,0".
        #[arg(long)]
        receivers: String,
        #[arg(long)]
        nt: usize,
        /// Time step (default: the model's stability bound).
        #[arg(long)]
        dt: Option<f64>,
        /// Source peak frequency in Hz for the band half-width.
        #[arg(long, default_value_t = 10.0)]
        frequency: f64,
        /// With --high-cut: derive the half-width from a band-pass filtered
        /// Ricker instead of a plain Ricker at --frequency.
        #[arg(long, requires = "high_cut")]
        low_cut: Option<f64>,
        #[arg(long, requires = "low_cut")]
        high_cut: Option<f64>,
        /// Allowed out-of-band energy fraction per receiver block.
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report RMSE and max-abs difference between two model grids.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

fn exit_code_for(err: &WdriError) -> u8 {
    match err {
        WdriError::Stability { .. }
        | WdriError::Divergence { .. }
        | WdriError::DegenerateInput(_)
        | WdriError::ZeroDirection => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("wdri: could not configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wdri: {e}");
            if let WdriError::Stability { max_dt, .. } = e {
                eprintln!("wdri: try time.dt = {:.6e} s or smaller", max_dt);
            }
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::MakeModel { kind, spec, out } => cmd_make_model(kind, spec, out, cli.seed),
        Command::Simulate { model, config, out } => cmd_simulate(model, config, out),
        Command::Invert {
            method,
            data,
            init,
            config,
            out,
            truth,
        } => cmd_invert(method, data, init, config, out, truth),
        Command::Qmatrix {
            model,
            receivers,
            nt,
            dt,
            frequency,
            low_cut,
            high_cut,
            threshold,
            out,
        } => cmd_qmatrix(
            model,
            receivers,
            nt,
            dt,
            frequency,
            low_cut.zip(high_cut),
            threshold,
            out,
        ),
        Command::Compare { a, b, truth } => cmd_compare(a, b, truth),
    }
}

fn load_model(path: &Path) -> Result<SlownessSquaredModel> {
    let file = read_grid(path)?;
    match file.kind {
        GridKind::Velocity => SlownessSquaredModel::from_velocity(file.grid, &file.values),
        GridKind::SlownessSquared => SlownessSquaredModel::new(file.grid, file.values),
        GridKind::Generic => Err(WdriError::InvalidArgument(format!(
            "{} holds a generic field, not a model (velocity or slowness-squared)",
            path.display()
        ))),
    }
}

fn write_model(path: &Path, model: &SlownessSquaredModel) -> Result<()> {
    write_grid(path, model.grid(), GridKind::Velocity, &model.velocity())
}

fn cmd_make_model(
    kind: ModelKind,
    spec: Option<PathBuf>,
    out: PathBuf,
    seed: u64,
) -> Result<ExitCode> {
    let (model, echo) = match kind {
        ModelKind::Camembert => {
            let s = match &spec {
                Some(p) => parse_camembert_spec(p)?,
                None => CamembertSpec::default(),
            };
            let (model, snap) = build_camembert(&s)?;
            if snap.requested_extent != snap.actual_extent {
                println!(
                    "extent snapped to ({:.1}, {:.1}) m",
                    snap.actual_extent.0, snap.actual_extent.1
                );
            }
            (model, camembert_echo(&s))
        }
        ModelKind::Checkerboard => {
            let s = match &spec {
                Some(p) => parse_checkerboard_spec(p)?,
                None => CheckerboardSpec::default(),
            };
            (build_checkerboard(&s)?, checkerboard_echo(&s))
        }
    };
    write_model(&out, &model)?;
    let sidecar = PathBuf::from(format!("{}.spec", out.display()));
    std::fs::write(
        &sidecar,
        format!("# generated by wdri make-model\n# seed = {seed}\n{echo}"),
    )
    .map_err(|e| WdriError::io(&sidecar, e))?;
    println!(
        "wrote {} ({}x{} nodes) and {}",
        out.display(),
        model.grid().nx,
        model.grid().nz,
        sidecar.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn camembert_echo(s: &CamembertSpec) -> String {
    let mut echo = format!(
        "grid.extent_x = {}\ngrid.extent_z = {}\ngrid.dx = {}\ngrid.dz = {}\n\
         grid.background_velocity = {}\ngrid.anomaly_velocity = {}\ngrid.radius = {}\n",
        s.extent_x, s.extent_z, s.dx, s.dz, s.background_velocity, s.anomaly_velocity, s.radius
    );
    if let Some((x, z)) = s.center {
        echo.push_str(&format!("grid.center_x = {x}\ngrid.center_z = {z}\n"));
    }
    echo
}

fn checkerboard_echo(s: &CheckerboardSpec) -> String {
    format!(
        "grid.nx = {}\ngrid.nz = {}\ngrid.dx = {}\ngrid.dz = {}\n\
         grid.background_velocity = {}\ngrid.tile_velocity = {}\ngrid.tile_size = {}\n",
        s.nx, s.nz, s.dx, s.dz, s.background_velocity, s.tile_velocity, s.tile_size
    )
}

/// Fail up front with the stability error (and the dt hint in main) instead
/// of deep inside the first solve.
fn check_stability(cfg: &RunConfig, model: &SlownessSquaredModel) -> Result<()> {
    let max_dt = cfl_max_dt(model);
    if cfg.time.dt > max_dt * (1.0 + 1e-12) {
        return Err(WdriError::Stability {
            dt: cfg.time.dt,
            max_dt,
        });
    }
    Ok(())
}

fn cmd_simulate(model: PathBuf, config: PathBuf, out: Option<PathBuf>) -> Result<ExitCode> {
    let model = load_model(&model)?;
    let cfg = parse_config(&config)?;
    check_stability(&cfg, &model)?;
    let acq = cfg.acquisition(model.grid())?;
    let wavelet = cfg.build_wavelet()?;
    let prop = Propagator::new(cfg.time, cfg.absorbing);
    let out = out.unwrap_or_else(data_dir);
    std::fs::create_dir_all(&out).map_err(|e| WdriError::io(&out, e))?;

    use rayon::prelude::*;
    let gathers: Vec<Result<ShotGather>> = (0..acq.n_sources())
        .into_par_iter()
        .map(|s| {
            let mut g = prop.forward_gather(&model, &wavelet, acq.sources()[s], &acq)?;
            g.shot_id = s;
            Ok(g)
        })
        .collect();
    for gather in gathers {
        let gather = gather?;
        let path = out.join(shot_file_name(gather.shot_id));
        write_gather(&path, &gather, acq.receivers())?;
    }
    println!(
        "wrote {} gathers to {} ({} wave solves)",
        acq.n_sources(),
        out.display(),
        prop.solve_count()
    );
    Ok(ExitCode::SUCCESS)
}

/// Read `shot_*.wds` files and order them by shot id; the count must match
/// the acquisition and every gather must share the receiver layout.
fn load_observed(dir: &Path, acq: &Acquisition, time: TimeAxis) -> Result<Vec<ShotGather>> {
    let entries = std::fs::read_dir(dir).map_err(|e| WdriError::io(dir, e))?;
    let mut shots = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| WdriError::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name.starts_with("shot_") && name.ends_with(".wds") {
            shots.push(read_gather(entry.path())?);
        }
    }
    if shots.is_empty() {
        return Err(WdriError::InvalidArgument(format!(
            "no shot_*.wds files in {}",
            dir.display()
        )));
    }
    shots.sort_by_key(|(g, _)| g.shot_id);
    if shots.len() != acq.n_sources() {
        return Err(WdriError::ShapeMismatch(format!(
            "{} gather files for {} configured sources",
            shots.len(),
            acq.n_sources()
        )));
    }
    let mut observed = Vec::with_capacity(shots.len());
    for (k, (gather, receivers)) in shots.into_iter().enumerate() {
        if gather.shot_id != k {
            return Err(WdriError::InvalidArgument(format!(
                "shot ids are not contiguous: expected {k}, found {}",
                gather.shot_id
            )));
        }
        if gather.time.nt != time.nt || (gather.time.dt - time.dt).abs() > 1e-15 {
            return Err(WdriError::ShapeMismatch(format!(
                "shot {k} has {} samples at dt {}, config says {} at {}",
                gather.time.nt, gather.time.dt, time.nt, time.dt
            )));
        }
        let same = receivers.len() == acq.receivers().len()
            && receivers
                .iter()
                .zip(acq.receivers())
                .all(|(a, b): (&Position, &Position)| {
                    (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9
                });
        if !same {
            return Err(WdriError::ShapeMismatch(format!(
                "shot {k} was recorded with a different receiver layout than the config"
            )));
        }
        observed.push(gather);
    }
    Ok(observed)
}

fn cmd_invert(
    method: Method,
    data: PathBuf,
    init: PathBuf,
    config: PathBuf,
    out: PathBuf,
    truth: Option<PathBuf>,
) -> Result<ExitCode> {
    let initial = load_model(&init)?;
    let mut cfg = parse_config(&config)?;
    let truth = truth.as_deref().map(load_model).transpose()?;
    check_stability(&cfg, &initial)?;
    let acq = cfg.acquisition(initial.grid())?;
    let wavelet = cfg.build_wavelet()?;
    let observed = load_observed(&data, &acq, cfg.time)?;
    let prop = Propagator::new(cfg.time, cfg.absorbing);
    std::fs::create_dir_all(&out).map_err(|e| WdriError::io(&out, e))?;
    let log_path = out.join("misfit.csv");
    if log_path.exists() {
        std::fs::remove_file(&log_path).map_err(|e| WdriError::io(&log_path, e))?;
    }

    let wanted_variant = match method {
        Method::Fwi => None,
        Method::Dri => Some(DriVariant::GradientDescent),
        Method::DriExact => Some(DriVariant::Exact),
    };
    if let Some(v) = wanted_variant {
        if cfg.dri_variant_explicit && cfg.dri.variant != v {
            return Err(WdriError::InvalidArgument(
                "--method disagrees with dri.variant in the config file".into(),
            ));
        }
        cfg.dri.variant = v;
    }

    let started = Instant::now();
    let snapshot_every = cfg.snapshot_every;
    let out_dir = out.clone();
    let mut log_error = None;
    let mut on_iteration = |record: &IterationRecord, model: &SlownessSquaredModel| {
        let row = MisfitLogRecord {
            iteration: record.iteration,
            misfit: record.misfit,
            normalized_misfit: record.normalized_misfit,
            solves: record.solves,
            wall_time_s: started.elapsed().as_secs_f64(),
            model_rmse: record.model_rmse,
        };
        if let Err(e) = append_misfit_log(&log_path, &row) {
            log_error.get_or_insert(e);
        }
        if (record.iteration + 1).is_multiple_of(snapshot_every) {
            let snap = out_dir.join(format!("model_iter_{:04}.wdg", record.iteration));
            if let Err(e) = write_model(&snap, model) {
                log_error.get_or_insert(e);
            }
        }
        println!(
            "iter {:4}  misfit {:.6e}  normalized {:.6e}  solves {}",
            record.iteration, record.misfit, record.normalized_misfit, record.solves
        );
    };

    let (final_model, stalled, iterations) = match method {
        Method::Fwi => {
            let state = fwi_invert(
                &prop,
                &cfg.fwi,
                &wavelet,
                &acq,
                &observed,
                &initial,
                truth.as_ref(),
                &mut on_iteration,
            )?;
            (state.model, state.stalled, state.history.len())
        }
        Method::Dri | Method::DriExact => {
            let state = dri_invert(
                &prop,
                &cfg.dri,
                &wavelet,
                &acq,
                &observed,
                &initial,
                truth.as_ref(),
                &mut on_iteration,
            )?;
            (state.model, false, state.history.len())
        }
    };
    if let Some(e) = log_error {
        return Err(e);
    }
    write_model(&out.join("final_model.wdg"), &final_model)?;
    println!(
        "finished after {} iterations, {} wave solves; final model in {}",
        iterations,
        prop.solve_count(),
        out.display()
    );
    if stalled {
        eprintln!("wdri: line search stalled; result kept but not converged");
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_qmatrix(
    model: PathBuf,
    receivers: String,
    nt: usize,
    dt: Option<f64>,
    frequency: f64,
    band: Option<(f64, f64)>,
    threshold: f64,
    out: PathBuf,
) -> Result<ExitCode> {
    let model = load_model(&model)?;
    let dt = dt.unwrap_or_else(|| cfl_max_dt(&model));
    let time = TimeAxis::new(nt, dt)?;
    let spec = GeometrySpec::parse_cli(&receivers)?;
    let positions = spec.resolve(model.grid());
    // A nominal source is required by the acquisition type; the operator
    // itself only involves receivers.
    let acq = Acquisition::new(model.grid(), vec![positions[0]], positions)?;
    let prop = Propagator::new(time, Default::default());

    let q = assemble_q_explicit(&prop, &model, &acq, time)?;
    let wavelet = match band {
        Some((low, high)) => wdri::domain::bandpass_ricker(low, high, time)?,
        None => wdri::domain::ricker(
            frequency,
            time,
            wdri::domain::default_ricker_delay(frequency),
        )?,
    };
    let halfwidth = wavelet_halfwidth(&wavelet, dt, 0.01);
    let report = verify_band_structure(&q, &acq, model.min_velocity(), halfwidth, threshold)?;

    std::fs::create_dir_all(&out).map_err(|e| WdriError::io(&out, e))?;
    write_q(&out.join("q_matrix.wdg"), &q)?;
    let csv_path = out.join("band_report.csv");
    let mut csv = String::from("receiver_i,receiver_j,max_shift_s,outside_fraction,pass\n");
    for b in &report.blocks {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            b.receiver_i, b.receiver_j, b.max_shift, b.outside_fraction, b.pass
        ));
    }
    std::fs::write(&csv_path, csv).map_err(|e| WdriError::io(&csv_path, e))?;
    println!(
        "Q is {n}x{n} (asymmetry {:.3e}); band check: {}",
        q.asymmetry,
        if report.pass { "pass" } else { "FAIL" },
        n = q.data.nrows(),
    );
    Ok(ExitCode::SUCCESS)
}

/// Q stored as a generic square field with unit spacing.
fn write_q(path: &Path, q: &QMatrix) -> Result<()> {
    let n = q.data.nrows();
    let grid = Grid2D::new(n, n, 1.0, 1.0)?;
    write_grid(path, &grid, GridKind::Generic, &q.data)
}

fn cmd_compare(a: PathBuf, b: PathBuf, truth: Option<PathBuf>) -> Result<ExitCode> {
    let ma = load_model(&a)?;
    let mb = load_model(&b)?;
    let rmse = ma.velocity_rmse(&mb)?;
    let va = ma.velocity();
    let vb = mb.velocity();
    let max_abs = va
        .iter()
        .zip(vb.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    println!("velocity RMSE: {rmse:.6e} m/s");
    println!("max abs difference: {max_abs:.6e} m/s");
    if let Some(truth) = truth {
        let mt = load_model(&truth)?;
        println!(
            "truth RMSE of {}: {:.6e} m/s",
            a.display(),
            ma.velocity_rmse(&mt)?
        );
        println!(
            "truth RMSE of {}: {:.6e} m/s",
            b.display(),
            mb.velocity_rmse(&mt)?
        );
    }
    Ok(ExitCode::SUCCESS)
}
