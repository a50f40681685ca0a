//! C ABI for the wdri toolkit: opaque handles, integer error codes, and a
//! thread-local last-error message. The generated header lives in
//! `include/wdri.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use ndarray::Array2;
use wdri::domain::{
    build_camembert, build_checkerboard, Acquisition, CamembertSpec, CheckerboardSpec, Grid2D,
    SlownessSquaredModel, TimeAxis,
};
use wdri::io::{read_grid, write_grid, GridKind};
use wdri::propagator::{AbsorbingConfig, Propagator};
use wdri::WdriError;

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WdriStatus {
    Ok = 0,
    /// invalid argument, shape mismatch, or malformed input file
    InvalidInput = 1,
    /// CFL violation or a diverged wavefield
    Numerical = 2,
    /// file-system error
    Io = 3,
    /// null pointer or invalid UTF-8 from the caller
    BadPointer = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &WdriError) -> WdriStatus {
    match err {
        WdriError::Stability { .. } | WdriError::Divergence { .. } => WdriStatus::Numerical,
        WdriError::Io { .. } => WdriStatus::Io,
        _ => WdriStatus::InvalidInput,
    }
}

fn fail(err: WdriError) -> WdriStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

/// Copy the most recent error message (UTF-8, NUL-terminated, truncated to
/// `cap`) into `buf`. Returns the full message length in bytes.
/// # Safety
/// `buf` must be null or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn wdri_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() - 1
    })
}

/// Opaque velocity model handle.
pub struct WdriModel {
    inner: SlownessSquaredModel,
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, WdriStatus> {
    if path.is_null() {
        set_error("null path");
        return Err(WdriStatus::BadPointer);
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(WdriStatus::BadPointer)
        }
    }
}

fn store_model(out: *mut *mut WdriModel, model: SlownessSquaredModel) -> WdriStatus {
    if out.is_null() {
        set_error("null output handle");
        return WdriStatus::BadPointer;
    }
    unsafe {
        *out = Box::into_raw(Box::new(WdriModel { inner: model }));
    }
    WdriStatus::Ok
}

/// Load a model grid file (velocity or slowness-squared kind).
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be null or point to
/// writable storage for one pointer. Null pointers are reported as errors,
/// never dereferenced.
#[no_mangle]
pub unsafe extern "C" fn wdri_model_read(
    path: *const c_char,
    out: *mut *mut WdriModel,
) -> WdriStatus {
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let file = match read_grid(path) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let model = match file.kind {
        GridKind::Velocity => SlownessSquaredModel::from_velocity(file.grid, &file.values),
        GridKind::SlownessSquared => SlownessSquaredModel::new(file.grid, file.values),
        GridKind::Generic => Err(WdriError::InvalidArgument(
            "file holds a generic field, not a model".into(),
        )),
    };
    match model {
        Ok(m) => store_model(out, m),
        Err(e) => fail(e),
    }
}

/// Write a model as a velocity grid file.
/// # Safety
/// `model` must be null or a handle previously returned by this library;
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wdri_model_write(
    model: *const WdriModel,
    path: *const c_char,
) -> WdriStatus {
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let Some(model) = model.as_ref() else {
        set_error("null model handle");
        return WdriStatus::BadPointer;
    };
    let m = &model.inner;
    match write_grid(path, m.grid(), GridKind::Velocity, &m.velocity()) {
        Ok(()) => WdriStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Build the default Camembert benchmark model (4.8 x 6 km, 35.5 m spacing,
/// 4000 m/s background with a 4600 m/s circular anomaly).
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn wdri_model_camembert(out: *mut *mut WdriModel) -> WdriStatus {
    match build_camembert(&CamembertSpec::default()) {
        Ok((m, _)) => store_model(out, m),
        Err(e) => fail(e),
    }
}

/// Build the default checkerboard benchmark model (101 x 101 nodes at 20 m,
/// 1500 m/s background with 4000 m/s tiles of 200 m).
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn wdri_model_checkerboard(out: *mut *mut WdriModel) -> WdriStatus {
    match build_checkerboard(&CheckerboardSpec::default()) {
        Ok(m) => store_model(out, m),
        Err(e) => fail(e),
    }
}

/// Build a homogeneous model on an nx x nz grid.
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn wdri_model_homogeneous(
    nx: usize,
    nz: usize,
    dx: f64,
    dz: f64,
    velocity: f64,
    out: *mut *mut WdriModel,
) -> WdriStatus {
    let built = Grid2D::new(nx, nz, dx, dz)
        .and_then(|grid| SlownessSquaredModel::homogeneous(grid, velocity));
    match built {
        Ok(m) => store_model(out, m),
        Err(e) => fail(e),
    }
}

/// # Safety
/// `model` must be null or a handle previously returned by this library
/// that has not already been freed.
#[no_mangle]
pub unsafe extern "C" fn wdri_model_free(model: *mut WdriModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Grid shape and spacing of a model.
/// # Safety
/// `model` must be null or a live handle; each output pointer must be null
/// or point to writable storage of the corresponding type.
#[no_mangle]
pub unsafe extern "C" fn wdri_model_shape(
    model: *const WdriModel,
    nx: *mut usize,
    nz: *mut usize,
    dx: *mut f64,
    dz: *mut f64,
) -> WdriStatus {
    let Some(model) = model.as_ref() else {
        set_error("null model handle");
        return WdriStatus::BadPointer;
    };
    let grid = model.inner.grid();
    if let Some(p) = nx.as_mut() {
        *p = grid.nx;
    }
    if let Some(p) = nz.as_mut() {
        *p = grid.nz;
    }
    if let Some(p) = dx.as_mut() {
        *p = grid.dx;
    }
    if let Some(p) = dz.as_mut() {
        *p = grid.dz;
    }
    WdriStatus::Ok
}

/// Copy the velocity field (m/s) into `buf`, z-fastest, `nx*nz` doubles.
/// # Safety
/// `model` must be null or a live handle; `buf` must be null or point to at
/// least `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wdri_model_velocity(
    model: *const WdriModel,
    buf: *mut f64,
    len: usize,
) -> WdriStatus {
    let Some(model) = model.as_ref() else {
        set_error("null model handle");
        return WdriStatus::BadPointer;
    };
    let v = model.inner.velocity();
    if buf.is_null() || len < v.len() {
        set_error("velocity buffer too small");
        return WdriStatus::BadPointer;
    }
    for (k, value) in v.iter().enumerate() {
        *buf.add(k) = *value;
    }
    WdriStatus::Ok
}

/// Root-mean-square velocity difference between two models on the same grid.
/// # Safety
/// `a` and `b` must be null or live handles; `out` must be null or point to
/// a writable double.
#[no_mangle]
pub unsafe extern "C" fn wdri_model_rmse(
    a: *const WdriModel,
    b: *const WdriModel,
    out: *mut f64,
) -> WdriStatus {
    let (Some(a), Some(b), Some(out)) = (a.as_ref(), b.as_ref(), out.as_mut()) else {
        set_error("null handle");
        return WdriStatus::BadPointer;
    };
    match a.inner.velocity_rmse(&b.inner) {
        Ok(r) => {
            *out = r;
            WdriStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Simulate one shot with a Ricker source of peak frequency `f_peak` and
/// write the receiver traces into `traces` (nt*nr doubles, receiver-fastest:
/// index t*nr + r). `receivers_xz` holds nr (x, z) pairs.
/// # Safety
/// `model` must be null or a live handle; `receivers_xz` must be null or
/// point to `2 * nr` readable doubles; `traces` must be null or point to
/// `nt * nr` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wdri_simulate_shot(
    model: *const WdriModel,
    nt: usize,
    dt: f64,
    f_peak: f64,
    source_x: f64,
    source_z: f64,
    receivers_xz: *const f64,
    nr: usize,
    traces: *mut f64,
) -> WdriStatus {
    let Some(model) = model.as_ref() else {
        set_error("null model handle");
        return WdriStatus::BadPointer;
    };
    if receivers_xz.is_null() || traces.is_null() || nr == 0 {
        set_error("null receiver/trace buffer");
        return WdriStatus::BadPointer;
    }
    let receivers: Vec<(f64, f64)> = (0..nr)
        .map(|k| (*receivers_xz.add(2 * k), *receivers_xz.add(2 * k + 1)))
        .collect();
    let result = (|| -> wdri::Result<()> {
        let time = TimeAxis::new(nt, dt)?;
        let wavelet =
            wdri::domain::ricker(f_peak, time, wdri::domain::default_ricker_delay(f_peak))?;
        let acq = Acquisition::new(model.inner.grid(), vec![(source_x, source_z)], receivers)?;
        let prop = Propagator::new(time, AbsorbingConfig::default());
        let gather = prop.forward_gather(&model.inner, &wavelet, (source_x, source_z), &acq)?;
        for t in 0..nt {
            for r in 0..nr {
                *traces.add(t * nr + r) = gather.traces[(t, r)];
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => WdriStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Largest stable time step for a model (0.9 CFL safety factor).
/// # Safety
/// `model` must be null or a live handle; `out` must be null or point to a
/// writable double.
#[no_mangle]
pub unsafe extern "C" fn wdri_stable_dt(model: *const WdriModel, out: *mut f64) -> WdriStatus {
    let (Some(model), Some(out)) = (model.as_ref(), out.as_mut()) else {
        set_error("null handle");
        return WdriStatus::BadPointer;
    };
    *out = wdri::domain::cfl_max_dt(&model.inner);
    WdriStatus::Ok
}

// Silence the unused-import lint for Array2, which appears only in types the
// header generation walks.
#[allow(dead_code)]
fn _touch(_: Array2<f64>) {}
