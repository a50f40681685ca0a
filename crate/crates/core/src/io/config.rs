//! Run-configuration parser: UTF-8 text, one `key = value` per line, `#`
//! comments, dotted section prefixes (`grid.`, `time.`, `acquisition.`,
//! `fwi.`, `dri.`). Unknown keys are errors; every default is set here.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::domain::{
    bandpass_ricker, default_ricker_delay, line_positions, perimeter_positions, ricker,
    Acquisition, CamembertSpec, CheckerboardSpec, Grid2D, Position, TimeAxis, Wavelet,
};
use crate::dri::{DriConfig, DriVariant};
use crate::error::{Result, WdriError};
use crate::fwi::{DirectionMode, FwiConfig};
use crate::propagator::{AbsorbingConfig, StorageMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveletKind {
    Ricker,
    Bandpass,
}

#[derive(Debug, Clone)]
pub struct WaveletConfig {
    pub kind: WaveletKind,
    pub peak_frequency: f64,
    pub low_cut: f64,
    pub high_cut: f64,
    pub delay: Option<f64>,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        WaveletConfig {
            kind: WaveletKind::Ricker,
            peak_frequency: 10.0,
            low_cut: 2.0,
            high_cut: 20.0,
            delay: None,
        }
    }
}

impl WaveletConfig {
    pub fn build(&self, time: TimeAxis) -> Result<Wavelet> {
        match self.kind {
            WaveletKind::Ricker => {
                let delay = self
                    .delay
                    .unwrap_or_else(|| default_ricker_delay(self.peak_frequency));
                ricker(self.peak_frequency, time, delay)
            }
            WaveletKind::Bandpass => bandpass_ricker(self.low_cut, self.high_cut, time),
        }
    }
}

/// Source/receiver layout described symbolically so one config works across
/// grids of different extents.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometrySpec {
    /// `line x0,z0 x1,z1 n`: n positions evenly spaced from a to b.
    Line { a: Position, b: Position, n: usize },
    /// `perimeter margin n`: n positions around the rectangle inset by margin.
    Perimeter { margin: f64, n: usize },
    /// `points x0,z0 x1,z1 ...`: explicit list.
    Points(Vec<Position>),
}

impl GeometrySpec {
    pub fn resolve(&self, grid: &Grid2D) -> Vec<Position> {
        match self {
            GeometrySpec::Line { a, b, n } => line_positions(*a, *b, *n),
            GeometrySpec::Perimeter { margin, n } => perimeter_positions(grid, *margin, *n),
            GeometrySpec::Points(p) => p.clone(),
        }
    }

    /// Parse a bare geometry value (CLI flags, outside any config file).
    pub fn parse_cli(raw: &str) -> Result<GeometrySpec> {
        GeometrySpec::parse(raw).map_err(WdriError::InvalidArgument)
    }

    fn parse(raw: &str) -> std::result::Result<GeometrySpec, String> {
        let mut tokens = raw.split_whitespace();
        let pair = |tok: &str| -> std::result::Result<Position, String> {
            tok.split_once(',')
                .and_then(|(x, z)| Some((x.parse::<f64>().ok()?, z.parse::<f64>().ok()?)))
                .ok_or_else(|| format!("expected x,z pair, got {tok:?}"))
        };
        match tokens.next() {
            Some("line") => {
                let rest: Vec<&str> = tokens.collect();
                if rest.len() != 3 {
                    return Err("line needs: x0,z0 x1,z1 n".into());
                }
                let n: usize = rest[2]
                    .parse()
                    .map_err(|_| format!("bad count {:?}", rest[2]))?;
                if n == 0 {
                    return Err("count must be positive".into());
                }
                Ok(GeometrySpec::Line {
                    a: pair(rest[0])?,
                    b: pair(rest[1])?,
                    n,
                })
            }
            Some("perimeter") => {
                let rest: Vec<&str> = tokens.collect();
                if rest.len() != 2 {
                    return Err("perimeter needs: margin n".into());
                }
                let margin: f64 = rest[0]
                    .parse()
                    .map_err(|_| format!("bad margin {:?}", rest[0]))?;
                let n: usize = rest[1]
                    .parse()
                    .map_err(|_| format!("bad count {:?}", rest[1]))?;
                if n == 0 {
                    return Err("count must be positive".into());
                }
                Ok(GeometrySpec::Perimeter { margin, n })
            }
            Some("points") => {
                let pts = tokens
                    .map(pair)
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                if pts.is_empty() {
                    return Err("points needs at least one x,z pair".into());
                }
                Ok(GeometrySpec::Points(pts))
            }
            other => Err(format!(
                "unknown geometry {other:?}; expected line | perimeter | points"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub time: TimeAxis,
    pub wavelet: WaveletConfig,
    pub absorbing: AbsorbingConfig,
    pub sources: GeometrySpec,
    pub receivers: GeometrySpec,
    pub fwi: FwiConfig,
    pub dri: DriConfig,
    /// true when the file set `dri.variant` explicitly (the CLI cross-checks
    /// it against `--method`)
    pub dri_variant_explicit: bool,
    /// model snapshot cadence for inversion runs
    pub snapshot_every: usize,
}

impl RunConfig {
    pub fn acquisition(&self, grid: &Grid2D) -> Result<Acquisition> {
        Acquisition::new(
            grid,
            self.sources.resolve(grid),
            self.receivers.resolve(grid),
        )
    }

    pub fn build_wavelet(&self) -> Result<Wavelet> {
        self.wavelet.build(self.time)
    }
}

/// Raw `key = value` file: tracks line numbers for errors and which keys
/// were consumed so leftovers can be reported as typos.
struct KeyFile {
    path: PathBuf,
    entries: HashMap<String, (String, usize)>,
    consumed: Vec<String>,
}

impl KeyFile {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| WdriError::io(path, e))?;
        let mut entries = HashMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(WdriError::Config {
                    path: path.to_path_buf(),
                    line,
                    message: format!("expected `key = value`, got {stripped:?}"),
                });
            };
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (value.trim().to_string(), line))
                .is_some()
            {
                return Err(WdriError::Config {
                    path: path.to_path_buf(),
                    line,
                    message: format!("duplicate key {key:?}"),
                });
            }
        }
        Ok(KeyFile {
            path: path.to_path_buf(),
            entries,
            consumed: Vec::new(),
        })
    }

    fn error(&self, line: usize, message: String) -> WdriError {
        WdriError::Config {
            path: self.path.clone(),
            line,
            message,
        }
    }

    fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        let hit = self.entries.get(key).cloned();
        if hit.is_some() {
            self.consumed.push(key.to_string());
        }
        hit
    }

    fn get<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((value, line)) => value
                .parse::<T>()
                .map(Some)
                .map_err(|e| self.error(line, format!("bad value for {key}: {e}"))),
        }
    }

    fn get_or<T>(&mut self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Parse with a custom function; used for enum-like values.
    fn get_mapped<T>(
        &mut self,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some((value, line)) => {
                parse(&value).map_err(|e| self.error(line, format!("bad value for {key}: {e}")))
            }
        }
    }

    fn finish(mut self) -> Result<()> {
        for key in &self.consumed {
            self.entries.remove(key);
        }
        if let Some((key, (_, line))) = self.entries.iter().min_by_key(|(_, (_, line))| *line) {
            return Err(WdriError::Config {
                path: self.path.clone(),
                line: *line,
                message: format!("unknown key {key:?}"),
            });
        }
        Ok(())
    }
}

const REQUIRED_KEYS: &[&str] = &[
    "time.nt",
    "time.dt",
    "acquisition.sources",
    "acquisition.receivers",
];

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let mut kf = KeyFile::load(path)?;

    let missing: Vec<&str> = REQUIRED_KEYS
        .iter()
        .filter(|k| !kf.entries.contains_key(**k))
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(WdriError::Config {
            path: path.to_path_buf(),
            line: 0,
            message: format!("missing required keys: {}", missing.join(", ")),
        });
    }

    let nt: usize = kf.get("time.nt")?.unwrap();
    let dt: f64 = kf.get("time.dt")?.unwrap();
    let time = TimeAxis::new(nt, dt)?;

    let wavelet = WaveletConfig {
        kind: kf.get_mapped("time.wavelet", WaveletKind::Ricker, |s| match s {
            "ricker" => Ok(WaveletKind::Ricker),
            "bandpass" => Ok(WaveletKind::Bandpass),
            other => Err(format!("expected ricker | bandpass, got {other:?}")),
        })?,
        peak_frequency: kf.get_or("time.peak_frequency", 10.0)?,
        low_cut: kf.get_or("time.low_cut", 2.0)?,
        high_cut: kf.get_or("time.high_cut", 20.0)?,
        delay: kf.get("time.delay")?,
    };

    let defaults_abs = AbsorbingConfig::default();
    let mut absorbing = AbsorbingConfig {
        layer_width: kf.get_or("grid.absorbing_width", defaults_abs.layer_width)?,
        strength: kf.get_or("grid.absorbing_strength", defaults_abs.strength)?,
        ..defaults_abs
    };
    absorbing.free_surface.top = kf.get_or("grid.free_surface_top", false)?;
    absorbing.free_surface.bottom = kf.get_or("grid.free_surface_bottom", false)?;
    absorbing.free_surface.left = kf.get_or("grid.free_surface_left", false)?;
    absorbing.free_surface.right = kf.get_or("grid.free_surface_right", false)?;

    let geometry = |kf: &mut KeyFile, key: &str| -> Result<GeometrySpec> {
        let (value, line) = kf.raw(key).unwrap();
        GeometrySpec::parse(&value).map_err(|e| kf.error(line, format!("bad {key}: {e}")))
    };
    let sources = geometry(&mut kf, "acquisition.sources")?;
    let receivers = geometry(&mut kf, "acquisition.receivers")?;

    let df = FwiConfig::default();
    let fwi = FwiConfig {
        max_iterations: kf.get_or("fwi.max_iterations", df.max_iterations)?,
        shrink: kf.get_or("fwi.shrink", df.shrink)?,
        sufficient_decrease: kf.get_or("fwi.sufficient_decrease", df.sufficient_decrease)?,
        max_trials: kf.get_or("fwi.max_trials", df.max_trials)?,
        direction: kf.get_mapped("fwi.direction", df.direction, |s| match s {
            "steepest" => Ok(DirectionMode::Steepest),
            "pseudo-hessian" => Ok(DirectionMode::PseudoHessian),
            other => Err(format!("expected steepest | pseudo-hessian, got {other:?}")),
        })?,
        mask_halo: kf.get_or("fwi.mask_halo", df.mask_halo)?,
        tolerance: kf.get_or("fwi.tolerance", df.tolerance)?,
        epsilon_frac: kf.get_or("fwi.epsilon_frac", df.epsilon_frac)?,
        v_min: kf.get_or("fwi.v_min", df.v_min)?,
        v_max: kf.get_or("fwi.v_max", df.v_max)?,
    };
    fwi.validate()?;

    let dd = DriConfig::default();
    let dri_variant_explicit = kf.entries.contains_key("dri.variant");
    let dri = DriConfig {
        max_iterations: kf.get_or("dri.max_iterations", dd.max_iterations)?,
        variant: kf.get_mapped("dri.variant", dd.variant, |s| match s {
            "gradient-descent" => Ok(DriVariant::GradientDescent),
            "exact" => Ok(DriVariant::Exact),
            other => Err(format!("expected gradient-descent | exact, got {other:?}")),
        })?,
        mu: kf.get_or("dri.mu", dd.mu)?,
        cg_tol: kf.get_or("dri.cg_tol", dd.cg_tol)?,
        cg_max_iter: kf.get_or("dri.cg_max_iter", dd.cg_max_iter)?,
        storage: kf.get_mapped("dri.storage", dd.storage, |s| match s {
            "full" => Ok(StorageMode::Full),
            "boundary" => Ok(StorageMode::Boundary),
            other => Err(format!("expected full | boundary, got {other:?}")),
        })?,
        tolerance: kf.get_or("dri.tolerance", dd.tolerance)?,
        epsilon_frac: kf.get_or("dri.epsilon_frac", dd.epsilon_frac)?,
        mask_halo: kf.get_or("dri.mask_halo", dd.mask_halo)?,
        v_min: kf.get_or("dri.v_min", dd.v_min)?,
        v_max: kf.get_or("dri.v_max", dd.v_max)?,
    };
    dri.validate()?;

    let snapshot_every = kf.get_or("snapshot_every", 10usize)?;
    if snapshot_every == 0 {
        return Err(WdriError::InvalidArgument(
            "snapshot_every must be positive".into(),
        ));
    }

    kf.finish()?;
    Ok(RunConfig {
        time,
        wavelet,
        absorbing,
        sources,
        receivers,
        fwi,
        dri,
        dri_variant_explicit,
        snapshot_every,
    })
}

/// Optional overrides for `make-model --kind camembert --spec file`.
pub fn parse_camembert_spec(path: impl AsRef<Path>) -> Result<CamembertSpec> {
    let mut kf = KeyFile::load(path.as_ref())?;
    let d = CamembertSpec::default();
    let center_x: Option<f64> = kf.get("grid.center_x")?;
    let center_z: Option<f64> = kf.get("grid.center_z")?;
    let spec = CamembertSpec {
        extent_x: kf.get_or("grid.extent_x", d.extent_x)?,
        extent_z: kf.get_or("grid.extent_z", d.extent_z)?,
        dx: kf.get_or("grid.dx", d.dx)?,
        dz: kf.get_or("grid.dz", d.dz)?,
        background_velocity: kf.get_or("grid.background_velocity", d.background_velocity)?,
        anomaly_velocity: kf.get_or("grid.anomaly_velocity", d.anomaly_velocity)?,
        center: match (center_x, center_z) {
            (Some(x), Some(z)) => Some((x, z)),
            (None, None) => None,
            _ => {
                return Err(WdriError::InvalidArgument(
                    "grid.center_x and grid.center_z must be given together".into(),
                ))
            }
        },
        radius: kf.get_or("grid.radius", d.radius)?,
    };
    kf.finish()?;
    Ok(spec)
}

/// Optional overrides for `make-model --kind checkerboard --spec file`.
pub fn parse_checkerboard_spec(path: impl AsRef<Path>) -> Result<CheckerboardSpec> {
    let mut kf = KeyFile::load(path.as_ref())?;
    let d = CheckerboardSpec::default();
    let spec = CheckerboardSpec {
        nx: kf.get_or("grid.nx", d.nx)?,
        nz: kf.get_or("grid.nz", d.nz)?,
        dx: kf.get_or("grid.dx", d.dx)?,
        dz: kf.get_or("grid.dz", d.dz)?,
        background_velocity: kf.get_or("grid.background_velocity", d.background_velocity)?,
        tile_velocity: kf.get_or("grid.tile_velocity", d.tile_velocity)?,
        tile_size: kf.get_or("grid.tile_size", d.tile_size)?,
    };
    kf.finish()?;
    Ok(spec)
}
