//! C ABI over heom-core.
//!
//! Objects cross the boundary as opaque pointers created by `heom_*_new` or
//! the run functions and released with the matching `heom_*_free`. Every
//! fallible call returns a [`HeomStatus`]; the message of the most recent
//! failure on the calling thread is available from [`heom_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use heom_core::config::{Mode, RunConfig};
use heom_core::hierarchy::{propagate, Trajectory};
use heom_core::oct::{self, ControlResult};
use heom_core::pipeline::{self, RunOptions};
use heom_core::{units, ErrorClass, HeomError};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeomStatus {
    Ok = 0,
    /// Invalid configuration or argument.
    Config = 1,
    /// The integration failed (non-finite values, step underflow).
    Numerical = 2,
    /// The hierarchy or expansion exceeded a configured cap.
    Capacity = 3,
    Io = 4,
    /// A required pointer was null.
    NullPointer = 5,
    /// An index was out of range or a buffer too small.
    OutOfRange = 6,
    /// Internal panic caught at the boundary.
    Panic = 7,
}

/// Pipeline selector for [`heom_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeomMode {
    Propagate = 0,
    Witness = 1,
    Optimize = 2,
    Scan = 3,
    Correlation = 4,
}

/// Reduced state at one grid point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HeomSample {
    pub t_fs: f64,
    pub rho11: f64,
    pub rho22: f64,
    pub re_rho12: f64,
    pub im_rho12: f64,
    pub field_au: f64,
}

/// Parsed run configuration.
pub struct HeomConfig {
    inner: RunConfig,
}

/// Reduced trajectory from [`heom_propagate`].
pub struct HeomTrajectory {
    inner: Trajectory,
}

/// Outcome of [`heom_optimize`].
pub struct HeomControl {
    inner: ControlResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(err: HeomError) -> HeomStatus {
    let status = match err.class() {
        ErrorClass::Config => HeomStatus::Config,
        ErrorClass::Numerical => HeomStatus::Numerical,
        ErrorClass::Capacity => HeomStatus::Capacity,
        ErrorClass::Io => HeomStatus::Io,
    };
    set_error(err.to_string());
    status
}

/// Runs `body`, turning panics into [`HeomStatus::Panic`].
fn guard(body: impl FnOnce() -> HeomStatus) -> HeomStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            HeomStatus::Panic
        }
    }
}

fn null(what: &str) -> HeomStatus {
    set_error(format!("{what} is null"));
    HeomStatus::NullPointer
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, HeomStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        HeomStatus::Config
    })
}

fn publish<T>(out: *mut *mut T, value: T) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn heom_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn heom_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML configuration held in memory.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heom_config_from_toml(toml: *const c_char, out: *mut *mut HeomConfig) -> HeomStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let text = match c_str(toml, "toml") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match RunConfig::from_toml_str(text) {
            Ok(inner) => {
                publish(out, HeomConfig { inner });
                HeomStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Loads a TOML configuration file; relative field-file paths resolve
/// against the file's directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heom_config_load(path: *const c_char, out: *mut *mut HeomConfig) -> HeomStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let path = match c_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match RunConfig::load(Path::new(path)) {
            Ok(inner) => {
                publish(out, HeomConfig { inner });
                HeomStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `config` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn heom_config_free(config: *mut HeomConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Propagates the configured initial state under the configured field.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heom_propagate(config: *const HeomConfig, out: *mut *mut HeomTrajectory) -> HeomStatus {
    guard(|| {
        let (Some(cfg), false) = (config.as_ref(), out.is_null()) else {
            return null("config or out");
        };
        let cfg = &cfg.inner;
        let result = (|| {
            let heom = cfg.heom()?;
            let field = cfg.field()?;
            propagate(&heom, heom.initial_state(cfg.initial_rho(), field.t0), &field, cfg.tolerances())
        })();
        match result {
            Ok(inner) => {
                publish(out, HeomTrajectory { inner });
                HeomStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of samples (grid points) in the trajectory; 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn heom_trajectory_len(traj: *const HeomTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.samples.len())
}

/// Copies sample `index` into `out`.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heom_trajectory_sample(
    traj: *const HeomTrajectory,
    index: usize,
    out: *mut HeomSample,
) -> HeomStatus {
    guard(|| {
        let (Some(traj), Some(out)) = (traj.as_ref(), out.as_mut()) else {
            return null("trajectory or out");
        };
        let Some(s) = traj.inner.samples.get(index) else {
            set_error(format!("sample {index} out of range"));
            return HeomStatus::OutOfRange;
        };
        *out = HeomSample {
            t_fs: units::au_to_fs(s.time),
            rho11: s.rho[(0, 0)].re,
            rho22: s.rho[(1, 1)].re,
            re_rho12: s.rho[(0, 1)].re,
            im_rho12: s.rho[(0, 1)].im,
            field_au: s.field,
        };
        HeomStatus::Ok
    })
}

/// # Safety
/// `traj` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn heom_trajectory_free(traj: *mut HeomTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Runs the control iteration described by the `[oct]` section.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heom_optimize(config: *const HeomConfig, out: *mut *mut HeomControl) -> HeomStatus {
    guard(|| {
        let (Some(cfg), false) = (config.as_ref(), out.is_null()) else {
            return null("config or out");
        };
        let cfg = &cfg.inner;
        let result = (|| {
            let heom = cfg.heom()?;
            oct::optimize(&heom, &cfg.control_problem()?, cfg.tolerances())
        })();
        match result {
            Ok(inner) => {
                publish(out, HeomControl { inner });
                HeomStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Length of the fidelity history (guess included); 0 for NULL.
///
/// # Safety
/// `control` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn heom_control_history_len(control: *const HeomControl) -> usize {
    control.as_ref().map_or(0, |c| c.inner.fidelity.len())
}

/// Fidelity after iteration `index` (0 is the guess field).
///
/// # Safety
/// `control` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn heom_control_fidelity(control: *const HeomControl, index: usize, out: *mut f64) -> HeomStatus {
    guard(|| {
        let (Some(c), Some(out)) = (control.as_ref(), out.as_mut()) else {
            return null("control or out");
        };
        match c.inner.fidelity.get(index) {
            Some(f) => {
                *out = *f;
                HeomStatus::Ok
            }
            None => {
                set_error(format!("iteration {index} out of range"));
                HeomStatus::OutOfRange
            }
        }
    })
}

/// Number of samples in the optimized field; 0 for NULL.
///
/// # Safety
/// `control` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn heom_control_field_len(control: *const HeomControl) -> usize {
    control.as_ref().map_or(0, |c| c.inner.field.len())
}

/// Copies the optimized field (a.u., one value per interval of `dt_au`)
/// into `buf`, which must hold at least `heom_control_field_len` values.
///
/// # Safety
/// `control` must be a live handle; `buf` must be writable for `capacity`
/// doubles; `dt_au` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn heom_control_field(
    control: *const HeomControl,
    buf: *mut f64,
    capacity: usize,
    dt_au: *mut f64,
) -> HeomStatus {
    guard(|| {
        let Some(c) = control.as_ref() else {
            return null("control");
        };
        if buf.is_null() {
            return null("buf");
        }
        let values = &c.inner.field.values;
        if capacity < values.len() {
            set_error(format!("buffer holds {capacity} values, field has {}", values.len()));
            return HeomStatus::OutOfRange;
        }
        std::slice::from_raw_parts_mut(buf, values.len()).copy_from_slice(values);
        if let Some(dt) = dt_au.as_mut() {
            *dt = c.inner.field.dt;
        }
        HeomStatus::Ok
    })
}

/// # Safety
/// `control` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn heom_control_free(control: *mut HeomControl) {
    if !control.is_null() {
        drop(Box::from_raw(control));
    }
}

/// Runs a full pipeline and writes its data files and manifest to `out_dir`.
///
/// # Safety
/// `config` must be a live handle; `out_dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn heom_run(
    config: *const HeomConfig,
    mode: HeomMode,
    out_dir: *const c_char,
    witness: bool,
) -> HeomStatus {
    guard(|| {
        let Some(cfg) = config.as_ref() else {
            return null("config");
        };
        let dir = match c_str(out_dir, "out_dir") {
            Ok(d) => d,
            Err(s) => return s,
        };
        let mode = match mode {
            HeomMode::Propagate => Mode::Propagate,
            HeomMode::Witness => Mode::Witness,
            HeomMode::Optimize => Mode::Optimize,
            HeomMode::Scan => Mode::Scan,
            HeomMode::Correlation => Mode::Correlation,
        };
        match pipeline::run(mode, &cfg.inner, Path::new(dir), RunOptions { witness }) {
            Ok(_) => HeomStatus::Ok,
            Err(e) => fail(e),
        }
    })
}
