//! C ABI for the dampwave laboratory.
//!
//! Objects cross the boundary as opaque handles created by `dw_*_new`-style
//! constructors and released with the matching `*_free`. Every fallible call
//! returns a [`DwStatus`]; the message of the last failure on the calling
//! thread is available from [`dw_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use dampwave::analysis::p_star;
use dampwave::coefficients::{
    build_damping_plateau, build_potential_example1, build_potential_gaussian, validate_hypotheses,
    CoefficientProfile, DataShape, InitialData, Ramp,
};
use dampwave::config::Config;
use dampwave::diagnostics::EnergyRecord;
use dampwave::output::{records_to_csv, write_file};
use dampwave::solver::{run, run_c_star, RunConfig, RunResult, Termination};
use dampwave::spectral::c_star_for;
use dampwave::{Error, Grid};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Hypothesis = 3,
    Domain = 4,
    Config = 5,
    Convergence = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DwRamp {
    Sharp = 0,
    Smooth = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DwTermination {
    Completed = 0,
    Blowup = 1,
    Instability = 2,
}

/// One row of the time-series CSV.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DwRecord {
    pub t: f64,
    pub e_u: f64,
    pub l2_u: f64,
    pub l2_local: f64,
    pub dissipation_cum: f64,
    pub g_k: f64,
    pub identity_residual: f64,
    pub lemma25_residual: f64,
    pub lemma25_ratio: f64,
    pub au2_cum: f64,
}

impl From<&EnergyRecord> for DwRecord {
    fn from(r: &EnergyRecord) -> Self {
        DwRecord {
            t: r.t,
            e_u: r.e_u,
            l2_u: r.l2_u,
            l2_local: r.l2_local,
            dissipation_cum: r.dissipation_cum,
            g_k: r.g_k,
            identity_residual: r.identity_residual,
            lemma25_residual: r.lemma25_residual,
            lemma25_ratio: r.lemma25_ratio,
            au2_cum: r.au2_cum,
        }
    }
}

/// Hypothesis check summary of a profile.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DwValidation {
    pub all_passed: bool,
    pub failed_checks: usize,
    pub c_star: f64,
    pub v_origin: f64,
    pub smallness_bound: f64,
}

/// Sampled potential and damping on a grid.
pub struct DwProfile {
    inner: CoefficientProfile,
}

/// Finished simulation.
pub struct DwRun {
    inner: RunResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DwStatus {
    match e {
        Error::Hypothesis(_) => DwStatus::Hypothesis,
        Error::Domain(_) => DwStatus::Domain,
        Error::Config(_) | Error::Parse { .. } => DwStatus::Config,
        Error::Convergence { .. } => DwStatus::Convergence,
        Error::Io { .. } => DwStatus::Io,
        Error::DivisionGuard(_) | Error::Setup(_) | Error::Fit(_) => DwStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DwStatus, String)>) -> DwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            DwStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("panic: {msg}"));
            DwStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (DwStatus, String)>;
}

impl<T> IntoFfi<T> for dampwave::Result<T> {
    fn ffi(self) -> Result<T, (DwStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (DwStatus, String) {
    (DwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DwStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DwStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (DwStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `dw_*` call on the same thread.
#[no_mangle]
pub extern "C" fn dw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn dw_p_star(beta: f64) -> f64 {
    p_star(beta)
}

/// Discrete Poincare-type constant for inner radius `l` on
/// `[-half_width, half_width]` with `n_nodes` nodes.
///
/// # Safety
/// `out_c_star` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dw_estimate_c_star(
    l: f64,
    half_width: f64,
    n_nodes: usize,
    tol: f64,
    out_c_star: *mut f64,
) -> DwStatus {
    guard(|| {
        if out_c_star.is_null() {
            return Err(null("out_c_star"));
        }
        let est = c_star_for(l, half_width, n_nodes, tol).ffi()?;
        write_out(out_c_star, est.c_star, "out_c_star")
    })
}

fn ramp_of(r: DwRamp) -> Ramp {
    match r {
        DwRamp::Sharp => Ramp::Sharp,
        DwRamp::Smooth => Ramp::Smooth,
    }
}

unsafe fn finish_profile(
    grid: dampwave::Result<Grid>,
    build: impl FnOnce(&Grid) -> dampwave::Result<CoefficientProfile>,
    out: *mut *mut DwProfile,
) -> Result<(), (DwStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    let grid = grid.ffi()?;
    let inner = build(&grid).ffi()?;
    write_out(out, Box::into_raw(Box::new(DwProfile { inner })), "out")
}

/// Power-law potential with plateau damping on `[x_min, x_max]`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dw_profile_example1(
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    v0: f64,
    beta: f64,
    l: f64,
    eps1: f64,
    ramp: DwRamp,
    out: *mut *mut DwProfile,
) -> DwStatus {
    guard(|| {
        finish_profile(
            Grid::new(x_min, x_max, n_cells),
            |g| {
                let v = build_potential_example1(v0, beta, l, g)?;
                let a = build_damping_plateau(eps1, l, ramp_of(ramp), g)?;
                CoefficientProfile::new(*g, v, a)
            },
            out,
        )
    })
}

/// Gaussian potential `v0 exp(-nu x^2)` with plateau damping.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dw_profile_gaussian(
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    v0: f64,
    nu: f64,
    l: f64,
    eps1: f64,
    ramp: DwRamp,
    out: *mut *mut DwProfile,
) -> DwStatus {
    guard(|| {
        finish_profile(
            Grid::new(x_min, x_max, n_cells),
            |g| {
                let v = build_potential_gaussian(v0, nu, g)?;
                let a = build_damping_plateau(eps1, l, ramp_of(ramp), g)?;
                CoefficientProfile::new(*g, v, a)
            },
            out,
        )
    })
}

/// # Safety
/// `profile` must be null or a handle from a `dw_profile_*` constructor that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn dw_profile_free(profile: *mut DwProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Checks the coefficient hypotheses and the smallness condition.
///
/// # Safety
/// `profile` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dw_validate(profile: *const DwProfile, out: *mut DwValidation) -> DwStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c_star = run_c_star(p.inner.l).ffi()?;
        let rep = validate_hypotheses(&p.inner, c_star);
        write_out(
            out,
            DwValidation {
                all_passed: rep.all_passed(),
                failed_checks: rep.failures().count(),
                c_star: rep.c_star,
                v_origin: rep.v_origin,
                smallness_bound: rep.smallness_bound,
            },
            "out",
        )
    })
}

unsafe fn finish_run(config: &RunConfig, out: *mut *mut DwRun) -> Result<(), (DwStatus, String)> {
    let inner = run(config, None).ffi()?;
    write_out(out, Box::into_raw(Box::new(DwRun { inner })), "out")
}

/// Linear run on `profile` with centered bump data of the given radius.
///
/// # Safety
/// `profile` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dw_run_bump(
    profile: *const DwProfile,
    radius: f64,
    u0_amplitude: f64,
    u1_amplitude: f64,
    t_end: f64,
    out: *mut *mut DwRun,
) -> DwStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let shape = DataShape::Bump { radius, center: 0.0 };
        shape.check().ffi()?;
        let data = InitialData::from_shape(&p.inner.grid, shape, u0_amplitude, u1_amplitude);
        finish_run(&RunConfig::new(p.inner.clone(), data, t_end), out)
    })
}

/// Runs the TOML configuration in `text`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dw_run_config_str(text: *const c_char, out: *mut *mut DwRun) -> DwStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = Config::parse(text, "<string>").ffi()?;
        finish_run(&cfg.run_config().ffi()?, out)
    })
}

/// Runs the TOML configuration file at `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dw_run_config_file(path: *const c_char, out: *mut *mut DwRun) -> DwStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (cfg, _) = Config::load(Path::new(path)).ffi()?;
        finish_run(&cfg.run_config().ffi()?, out)
    })
}

/// Number of records; zero for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dw_run_record_count(run: *const DwRun) -> usize {
    run.as_ref().map_or(0, |r| r.inner.records.len())
}

/// # Safety
/// `run` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dw_run_record(run: *const DwRun, index: usize, out: *mut DwRecord) -> DwStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let rec = r.inner.records.get(index).ok_or_else(|| {
            (
                DwStatus::InvalidArgument,
                format!("record {index} out of range ({} records)", r.inner.records.len()),
            )
        })?;
        write_out(out, DwRecord::from(rec), "out")
    })
}

/// Termination kind, with the stopping time in `out_t` (`t_end` when completed).
///
/// # Safety
/// `run` must be a live handle; the outputs must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dw_run_termination(
    run: *const DwRun,
    out_kind: *mut DwTermination,
    out_t: *mut f64,
) -> DwStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let (kind, t) = match r.inner.termination {
            Termination::Completed => (DwTermination::Completed, r.inner.final_state.t),
            Termination::Blowup { t } => (DwTermination::Blowup, t),
            Termination::Instability { t } => (DwTermination::Instability, t),
        };
        write_out(out_kind, kind, "out_kind")?;
        write_out(out_t, t, "out_t")
    })
}

/// Writes the time-series CSV of `run` to `path`.
///
/// # Safety
/// `run` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dw_run_write_csv(run: *const DwRun, path: *const c_char) -> DwStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let path = str_arg(path, "path")?;
        write_file(Path::new(path), &records_to_csv(&r.inner.records)).ffi()
    })
}

/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dw_run_free(run: *mut DwRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
