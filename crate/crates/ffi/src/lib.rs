//! C ABI over the core crate.
//!
//! Every function returns an [`SaStatus`]; on failure the message is
//! available from [`sa_last_error_message`] on the same thread. Handles are
//! opaque, created by the `*_parse`/`*_load`/`*_solve`/`*_execute` calls and
//! released by the matching `*_free`. Passing NULL to a `*_free` is a no-op.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use stringasym::config::{ConfigError, RunConfig};
use stringasym::expr::{parse_flux, resolve_alias, ExprError, FluxExpr};
use stringasym::params::{Closure, DerivedParams, PhysicalParams};
use stringasym::pipeline::PipelineError;
use stringasym::run::{run, RunOutput};
use stringasym::{FieldState, KdvState, PeriodicGrid};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigParse = 3,
    ConfigInvalid = 4,
    FluxSyntax = 5,
    FluxUnknownSymbol = 6,
    FluxNonzeroAtOrigin = 7,
    InvalidParams = 8,
    SolverFailure = 9,
    Io = 10,
    OutOfRange = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// Closure used for the effective speed and flux coefficient.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaClosure {
    Consistent = 0,
    Printed = 1,
}

/// Field selector for trajectory access.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaField {
    U = 0,
    Ut = 1,
    V = 2,
    Vt = 3,
    /// KdV profile; only valid on KdV trajectories.
    S = 4,
}

/// KdV branch selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaBranch {
    I = 0,
    II = 1,
}

/// Derived constants of the reduced equations.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaDerived {
    pub k: f64,
    pub cap_k: f64,
    pub flux_scale: f64,
    pub v_ratio: f64,
    /// 1 when `k1 == k2`.
    pub degenerate: i32,
}

/// Parsed nonlinearity `f(u, v)`.
pub struct SaFlux {
    inner: FluxExpr,
}

/// Validated run configuration.
pub struct SaConfig {
    inner: RunConfig,
}

/// Snapshots from a full or KdV solve on one grid.
pub struct SaTrajectory {
    grid: PeriodicGrid,
    times: Vec<f64>,
    fields: Vec<Snapshot>,
}

enum Snapshot {
    Full(FieldState),
    Kdv(KdvState),
}

/// Outcome of a configured run, with its manifest.
pub struct SaRun {
    output: RunOutput,
    manifest: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn fail(status: SaStatus, msg: impl Into<String>) -> SaStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SaStatus) -> SaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == SaStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(SaStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, SaStatus> {
    if p.is_null() {
        return Err(fail(SaStatus::NullPointer, "string argument is NULL"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SaStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn expr_status(e: &ExprError) -> SaStatus {
    match e {
        ExprError::Syntax { .. } => SaStatus::FluxSyntax,
        ExprError::UnknownSymbol { .. } => SaStatus::FluxUnknownSymbol,
        ExprError::NonzeroAtOrigin { .. } => SaStatus::FluxNonzeroAtOrigin,
    }
}

fn config_status(e: &ConfigError) -> SaStatus {
    match e {
        ConfigError::Io { .. } => SaStatus::Io,
        ConfigError::Parse { .. } => SaStatus::ConfigParse,
        ConfigError::Validation { .. } => SaStatus::ConfigInvalid,
        ConfigError::Flux { source, .. } => expr_status(source),
    }
}

fn pipeline_status(e: &PipelineError) -> SaStatus {
    match e {
        PipelineError::Model(_) => SaStatus::InvalidParams,
        PipelineError::AtEps { source, .. } => pipeline_status(source),
        _ => SaStatus::SolverFailure,
    }
}

unsafe fn out_ptr<T>(out: *mut *mut T) -> Result<&'static mut *mut T, SaStatus> {
    if out.is_null() {
        return Err(fail(SaStatus::NullPointer, "output pointer is NULL"));
    }
    *out = ptr::null_mut();
    Ok(&mut *out)
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failed call on this thread; empty after success.
/// Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn sa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses `source` (an expression or one of the aliases `bilinear`,
/// `quadratic`, `zero`) into a flux handle.
#[no_mangle]
pub unsafe extern "C" fn sa_flux_parse(source: *const c_char, out: *mut *mut SaFlux) -> SaStatus {
    guard(|| {
        let out = tri!(out_ptr(out));
        let text = tri!(str_arg(source));
        match parse_flux(resolve_alias(text)) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(SaFlux { inner: f }));
                SaStatus::Ok
            }
            Err(e) => fail(expr_status(&e), e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_flux_eval(flux: *const SaFlux, u: f64, v: f64, out: *mut f64) -> SaStatus {
    guard(|| {
        if flux.is_null() || out.is_null() {
            return fail(SaStatus::NullPointer, "flux or output pointer is NULL");
        }
        *out = (*flux).inner.eval(u, v);
        SaStatus::Ok
    })
}

/// Canonical printed form of the parsed expression, written NUL-terminated
/// into `buf`. `needed` receives the required size including the NUL.
#[no_mangle]
pub unsafe extern "C" fn sa_flux_to_string(
    flux: *const SaFlux,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> SaStatus {
    guard(|| {
        if flux.is_null() {
            return fail(SaStatus::NullPointer, "flux is NULL");
        }
        let text = (*flux).inner.ast().to_string();
        let bytes = text.as_bytes();
        if !needed.is_null() {
            *needed = bytes.len() + 1;
        }
        if buf.is_null() || len < bytes.len() + 1 {
            return fail(SaStatus::BufferTooSmall, format!("need {} bytes", bytes.len() + 1));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
        *buf.add(bytes.len()) = 0;
        SaStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_flux_free(flux: *mut SaFlux) {
    if !flux.is_null() {
        drop(Box::from_raw(flux));
    }
}

/// Derived constants for the given parameters.
#[no_mangle]
pub unsafe extern "C" fn sa_derived(
    eps: f64,
    k1: f64,
    k2: f64,
    a: f64,
    b: f64,
    closure: SaClosure,
    out: *mut SaDerived,
) -> SaStatus {
    guard(|| {
        if out.is_null() {
            return fail(SaStatus::NullPointer, "output pointer is NULL");
        }
        let closure = match closure {
            SaClosure::Consistent => Closure::Consistent,
            SaClosure::Printed => Closure::Printed,
        };
        match PhysicalParams::new(eps, k1, k2, a, b).and_then(|p| DerivedParams::new(&p, closure)) {
            Ok(d) => {
                *out = SaDerived {
                    k: d.k,
                    cap_k: d.cap_k,
                    flux_scale: d.flux_scale,
                    v_ratio: d.v_ratio,
                    degenerate: d.degenerate as i32,
                };
                SaStatus::Ok
            }
            Err(e) => fail(SaStatus::InvalidParams, e.to_string()),
        }
    })
}

/// Parses configuration text.
#[no_mangle]
pub unsafe extern "C" fn sa_config_parse(text: *const c_char, out: *mut *mut SaConfig) -> SaStatus {
    guard(|| {
        let out = tri!(out_ptr(out));
        let text = tri!(str_arg(text));
        match text.parse::<RunConfig>() {
            Ok(c) => {
                *out = Box::into_raw(Box::new(SaConfig { inner: c }));
                SaStatus::Ok
            }
            Err(e) => fail(config_status(&e), e.to_string()),
        }
    })
}

/// Reads and parses a configuration file.
#[no_mangle]
pub unsafe extern "C" fn sa_config_load(path: *const c_char, out: *mut *mut SaConfig) -> SaStatus {
    guard(|| {
        let out = tri!(out_ptr(out));
        let path = tri!(str_arg(path));
        match stringasym::config::load_config(path) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(SaConfig { inner: c }));
                SaStatus::Ok
            }
            Err(e) => fail(config_status(&e), e.to_string()),
        }
    })
}

/// Replaces `eps` in the configuration.
#[no_mangle]
pub unsafe extern "C" fn sa_config_set_eps(config: *mut SaConfig, eps: f64) -> SaStatus {
    guard(|| {
        if config.is_null() {
            return fail(SaStatus::NullPointer, "config is NULL");
        }
        match (*config).inner.clone().with_eps(eps) {
            Ok(c) => {
                (*config).inner = c;
                SaStatus::Ok
            }
            Err(e) => fail(config_status(&e), e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_config_free(config: *mut SaConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Solves the full system at the configured output times.
#[no_mangle]
pub unsafe extern "C" fn sa_full_solve(config: *const SaConfig, out: *mut *mut SaTrajectory) -> SaStatus {
    guard(|| {
        let out = tri!(out_ptr(out));
        if config.is_null() {
            return fail(SaStatus::NullPointer, "config is NULL");
        }
        match (*config).inner.problem.solve_full() {
            Ok(states) => {
                let grid = states[0].grid;
                let times = states.iter().map(|s| s.t).collect();
                let fields = states.into_iter().map(Snapshot::Full).collect();
                *out = Box::into_raw(Box::new(SaTrajectory { grid, times, fields }));
                SaStatus::Ok
            }
            Err(e) => fail(pipeline_status(&e), e.to_string()),
        }
    })
}

/// Solves one KdV branch at the configured output times.
#[no_mangle]
pub unsafe extern "C" fn sa_kdv_solve(
    config: *const SaConfig,
    branch: SaBranch,
    out: *mut *mut SaTrajectory,
) -> SaStatus {
    guard(|| {
        let out = tri!(out_ptr(out));
        if config.is_null() {
            return fail(SaStatus::NullPointer, "config is NULL");
        }
        let pr = &(*config).inner.problem;
        match pr.solve_kdv(&pr.outputs()) {
            Ok((first, second)) => {
                let states = match branch {
                    SaBranch::I => first,
                    SaBranch::II => second,
                };
                let grid = states[0].grid;
                let times = states.iter().map(|s| s.t).collect();
                let fields = states.into_iter().map(Snapshot::Kdv).collect();
                *out = Box::into_raw(Box::new(SaTrajectory { grid, times, fields }));
                SaStatus::Ok
            }
            Err(e) => fail(pipeline_status(&e), e.to_string()),
        }
    })
}

/// Number of snapshots.
#[no_mangle]
pub unsafe extern "C" fn sa_trajectory_len(traj: *const SaTrajectory) -> usize {
    if traj.is_null() {
        0
    } else {
        (*traj).times.len()
    }
}

/// Number of grid points per snapshot.
#[no_mangle]
pub unsafe extern "C" fn sa_trajectory_points(traj: *const SaTrajectory) -> usize {
    if traj.is_null() {
        0
    } else {
        (*traj).grid.n
    }
}

#[no_mangle]
pub unsafe extern "C" fn sa_trajectory_time(traj: *const SaTrajectory, index: usize, out: *mut f64) -> SaStatus {
    guard(|| {
        if traj.is_null() || out.is_null() {
            return fail(SaStatus::NullPointer, "trajectory or output pointer is NULL");
        }
        let traj = &*traj;
        match traj.times.get(index) {
            Some(t) => {
                *out = *t;
                SaStatus::Ok
            }
            None => fail(SaStatus::OutOfRange, format!("snapshot {index} does not exist")),
        }
    })
}

/// Copies the grid coordinates (`x` or `zeta`) into `buf` of length `len`.
#[no_mangle]
pub unsafe extern "C" fn sa_trajectory_coordinates(traj: *const SaTrajectory, buf: *mut f64, len: usize) -> SaStatus {
    guard(|| {
        if traj.is_null() || buf.is_null() {
            return fail(SaStatus::NullPointer, "trajectory or buffer is NULL");
        }
        let pts = (*traj).grid.points();
        copy_out(&pts, buf, len)
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> SaStatus {
    if len < src.len() {
        return fail(SaStatus::BufferTooSmall, format!("need {} values", src.len()));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    SaStatus::Ok
}

/// Copies one field of snapshot `index` into `buf` of length `len`.
#[no_mangle]
pub unsafe extern "C" fn sa_trajectory_field(
    traj: *const SaTrajectory,
    index: usize,
    field: SaField,
    buf: *mut f64,
    len: usize,
) -> SaStatus {
    guard(|| {
        if traj.is_null() || buf.is_null() {
            return fail(SaStatus::NullPointer, "trajectory or buffer is NULL");
        }
        let traj = &*traj;
        let Some(snap) = traj.fields.get(index) else {
            return fail(SaStatus::OutOfRange, format!("snapshot {index} does not exist"));
        };
        let data: &[f64] = match (snap, field) {
            (Snapshot::Full(s), SaField::U) => &s.u,
            (Snapshot::Full(s), SaField::Ut) => &s.ut,
            (Snapshot::Full(s), SaField::V) => &s.v,
            (Snapshot::Full(s), SaField::Vt) => &s.vt,
            (Snapshot::Kdv(s), SaField::S) => &s.s,
            _ => return fail(SaStatus::OutOfRange, "field not available on this trajectory"),
        };
        copy_out(data, buf, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_trajectory_free(traj: *mut SaTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Executes the configured mode. With a non-NULL `out_dir` the artifacts
/// are written there; with NULL nothing touches the filesystem. A pipeline
/// failure still yields a run handle whose manifest records the error, and
/// returns `SolverFailure`.
#[no_mangle]
pub unsafe extern "C" fn sa_run_execute(
    config: *const SaConfig,
    out_dir: *const c_char,
    out: *mut *mut SaRun,
) -> SaStatus {
    guard(|| {
        let out = tri!(out_ptr(out));
        if config.is_null() {
            return fail(SaStatus::NullPointer, "config is NULL");
        }
        let cfg = &(*config).inner;
        let output = if out_dir.is_null() {
            stringasym::run::execute(cfg)
        } else {
            let dir = tri!(str_arg(out_dir));
            match run(cfg, Some(Path::new(dir))) {
                Ok((o, _)) => o,
                Err(e) => return fail(SaStatus::Io, e.to_string()),
            }
        };
        let manifest = CString::new(output.manifest.to_json()).unwrap_or_default();
        let error = output.manifest.error.as_ref().map(|e| e.message.clone());
        *out = Box::into_raw(Box::new(SaRun { output, manifest }));
        match error {
            None => SaStatus::Ok,
            Some(msg) => fail(SaStatus::SolverFailure, msg),
        }
    })
}

/// Manifest JSON, owned by the handle.
#[no_mangle]
pub unsafe extern "C" fn sa_run_manifest_json(run: *const SaRun) -> *const c_char {
    if run.is_null() {
        ptr::null()
    } else {
        (*run).manifest.as_ptr()
    }
}

/// 1 when the run finished without error, 0 otherwise.
#[no_mangle]
pub unsafe extern "C" fn sa_run_succeeded(run: *const SaRun) -> i32 {
    if run.is_null() {
        0
    } else {
        (*run).output.manifest.is_ok() as i32
    }
}

#[no_mangle]
pub unsafe extern "C" fn sa_run_free(run: *mut SaRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
