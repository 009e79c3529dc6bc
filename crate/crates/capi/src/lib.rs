//! C ABI for the foldover design library.
//!
//! Designs are opaque handles created by `fo_design_read`, `fo_generate`,
//! `fo_construct`, or `fo_augment` and released with `fo_design_free`.
//! Every fallible call returns an `FoStatus`; on failure a thread-local
//! message is retrievable with `fo_last_error_message`. Panics are caught
//! at the boundary and surfaced as `FO_STATUS_PANIC`.
//!
//! The generated header lives at `include/foldover.h`.

use foldover::analysis::SelectionCriterion;
use foldover::construct::{construct_direct, ConstructOptions, Scheme};
use foldover::criteria::eci_foldover;
use foldover::design::{AugmentedDesign, FactorKind, ModelOrder};
use foldover::dof::exact_dof;
use foldover::error::Error;
use foldover::hadamard::hadamard;
use foldover::search::{augment, coordinate_exchange, AugmentConfig, SearchConfig};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoStatus {
    FoStatusOk = 0,
    FoStatusInvalidArg = 1,
    FoStatusParse = 2,
    FoStatusSingular = 3,
    FoStatusInvalidDesign = 4,
    FoStatusIo = 5,
    FoStatusAnalysis = 6,
    FoStatusNullPointer = 7,
    FoStatusUtf8 = 8,
    FoStatusPanic = 9,
}

/// Opaque design handle (a foldover base plus optional augmented rows).
pub struct FoDesign {
    inner: AugmentedDesign,
}

/// Degrees-of-freedom summary.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FoDofSummary {
    pub fake_factor: usize,
    pub pure_error: usize,
    pub lack_of_fit: usize,
    pub total: usize,
}

/// Expected-confidence-interval evaluation of a design's foldover base.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FoEciReport {
    pub eci: f64,
    pub g: usize,
    pub c_value: f64,
    pub t_value: f64,
    pub alias_term: f64,
    pub avg_sqrt_half_variance: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> FoStatus {
    match err {
        Error::Dimension(_) | Error::Domain(_) | Error::InvalidConfig(_) => {
            FoStatus::FoStatusInvalidArg
        }
        Error::Singular { .. } => FoStatus::FoStatusSingular,
        Error::InvalidDesign(_) => FoStatus::FoStatusInvalidDesign,
        Error::Parse { .. } => FoStatus::FoStatusParse,
        Error::Io(_) => FoStatus::FoStatusIo,
        Error::Analysis(_) => FoStatus::FoStatusAnalysis,
    }
}

fn fail(err: Error) -> FoStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Runs a closure with panic isolation at the ABI boundary.
fn guarded(f: impl FnOnce() -> FoStatus) -> FoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            FoStatus::FoStatusPanic
        }
    }
}

unsafe fn cstr_arg(ptr: *const c_char) -> Result<PathBuf, FoStatus> {
    if ptr.is_null() {
        set_error("null path");
        return Err(FoStatus::FoStatusNullPointer);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(FoStatus::FoStatusUtf8)
        }
    }
}

fn model_of(code: i32) -> Result<ModelOrder, FoStatus> {
    match code {
        0 => Ok(ModelOrder::MainEffects),
        1 => Ok(ModelOrder::TwoFactorInteraction),
        2 => Ok(ModelOrder::FullQuadratic),
        other => {
            set_error(format!("unknown model code {other} (0=main, 1=2fi, 2=quad)"));
            Err(FoStatus::FoStatusInvalidArg)
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message for this thread into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null (to query length).
#[no_mangle]
pub unsafe extern "C" fn fo_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Reads a design from `<stem>.csv` + `<stem>.json` (either path accepted).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_design_read(path: *const c_char, out: *mut *mut FoDesign) -> FoStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return FoStatus::FoStatusNullPointer;
        }
        let path = match unsafe { cstr_arg(path) } {
            Ok(p) => p,
            Err(s) => return s,
        };
        match foldover::io::read_design(&path) {
            Ok(design) => {
                unsafe { *out = Box::into_raw(Box::new(FoDesign { inner: design })) };
                FoStatus::FoStatusOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Writes a design as `<stem>.csv` + `<stem>.json`.
///
/// # Safety
/// `design` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fo_design_write(design: *const FoDesign, path: *const c_char) -> FoStatus {
    guarded(|| {
        let Some(design) = (unsafe { design.as_ref() }) else {
            set_error("null design handle");
            return FoStatus::FoStatusNullPointer;
        };
        let path = match unsafe { cstr_arg(path) } {
            Ok(p) => p,
            Err(s) => return s,
        };
        match foldover::io::write_design(&path, &design.inner, None) {
            Ok(()) => FoStatus::FoStatusOk,
            Err(e) => fail(e),
        }
    })
}

/// Releases a design handle. Null is ignored.
///
/// # Safety
/// `design` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn fo_design_free(design: *mut FoDesign) {
    if !design.is_null() {
        drop(unsafe { Box::from_raw(design) });
    }
}

/// Dimensions of a design: total runs, factors, and augmented-run count.
///
/// # Safety
/// All pointers must be valid; output pointers may be null to skip a field.
#[no_mangle]
pub unsafe extern "C" fn fo_design_dims(
    design: *const FoDesign,
    n_runs: *mut usize,
    m: *mut usize,
    n_augmented: *mut usize,
) -> FoStatus {
    guarded(|| {
        let Some(design) = (unsafe { design.as_ref() }) else {
            set_error("null design handle");
            return FoStatus::FoStatusNullPointer;
        };
        unsafe {
            if !n_runs.is_null() {
                *n_runs = design.inner.n();
            }
            if !m.is_null() {
                *m = design.inner.m();
            }
            if !n_augmented.is_null() {
                *n_augmented = design.inner.n_augmented();
            }
        }
        FoStatus::FoStatusOk
    })
}

/// Reads one design entry (levels -1, 0, +1), 0-based indices.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fo_design_entry(
    design: *const FoDesign,
    run: usize,
    factor: usize,
    out: *mut i8,
) -> FoStatus {
    guarded(|| {
        let Some(design) = (unsafe { design.as_ref() }) else {
            set_error("null design handle");
            return FoStatus::FoStatusNullPointer;
        };
        if out.is_null() {
            set_error("null output pointer");
            return FoStatus::FoStatusNullPointer;
        }
        if run >= design.inner.n() || factor >= design.inner.m() {
            set_error(format!(
                "entry ({run}, {factor}) out of range for a {}x{} design",
                design.inner.n(),
                design.inner.m()
            ));
            return FoStatus::FoStatusInvalidArg;
        }
        unsafe { *out = design.inner.all_runs().get(run, factor) };
        FoStatus::FoStatusOk
    })
}

/// Degrees-of-freedom summary under a model (0=main, 1=2fi, 2=quad).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fo_design_dof(
    design: *const FoDesign,
    model: i32,
    out: *mut FoDofSummary,
) -> FoStatus {
    guarded(|| {
        let Some(design) = (unsafe { design.as_ref() }) else {
            set_error("null design handle");
            return FoStatus::FoStatusNullPointer;
        };
        if out.is_null() {
            set_error("null output pointer");
            return FoStatus::FoStatusNullPointer;
        }
        let order = match model_of(model) {
            Ok(o) => o,
            Err(s) => return s,
        };
        match exact_dof(&design.inner, order) {
            Ok(s) => {
                unsafe {
                    *out = FoDofSummary {
                        fake_factor: s.f,
                        pure_error: s.p,
                        lack_of_fit: s.lack_of_fit,
                        total: s.g,
                    };
                }
                FoStatus::FoStatusOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Expected-confidence-interval criterion of the design's foldover base.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fo_design_eci(
    design: *const FoDesign,
    alpha: f64,
    model: i32,
    out: *mut FoEciReport,
) -> FoStatus {
    guarded(|| {
        let Some(design) = (unsafe { design.as_ref() }) else {
            set_error("null design handle");
            return FoStatus::FoStatusNullPointer;
        };
        if out.is_null() {
            set_error("null output pointer");
            return FoStatus::FoStatusNullPointer;
        }
        let order = match model_of(model) {
            Ok(o) => o,
            Err(s) => return s,
        };
        match eci_foldover(design.inner.base().half(), alpha, order) {
            Ok(r) => {
                unsafe {
                    *out = FoEciReport {
                        eci: r.eci,
                        g: r.g_used,
                        c_value: r.c_value,
                        t_value: r.t_value,
                        alias_term: r.alias_term,
                        avg_sqrt_half_variance: r.avg_sqrt_half_v,
                    };
                }
                FoStatus::FoStatusOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Searches for a foldover design minimizing the ECI criterion.
/// `quad_all` nonzero marks every factor quadratic-capable.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn fo_generate(
    n: usize,
    m: usize,
    n0: usize,
    forced_replicates: usize,
    alpha: f64,
    model: i32,
    quad_all: i32,
    starts: usize,
    seed: u64,
    out: *mut *mut FoDesign,
) -> FoStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return FoStatus::FoStatusNullPointer;
        }
        let order = match model_of(model) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let kind =
            if quad_all != 0 { FactorKind::QuadraticCapable } else { FactorKind::TwoLevel };
        let cfg = SearchConfig {
            n,
            m,
            factors: vec![kind; m],
            n0,
            forced_replicates,
            alpha,
            model: order,
            n_starts: starts,
            seed,
            max_sweeps: 50,
        };
        match coordinate_exchange(&cfg) {
            Ok(outcome) => {
                let design = outcome.half.foldover().into_design();
                unsafe { *out = Box::into_raw(Box::new(FoDesign { inner: design })) };
                FoStatus::FoStatusOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Builds a half design directly from a Hadamard matrix and returns its
/// foldover. Scheme codes 0-3 select the n/2 mod 4 construction.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_construct(
    scheme: i32,
    n: usize,
    m: usize,
    out: *mut *mut FoDesign,
) -> FoStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return FoStatus::FoStatusNullPointer;
        }
        let scheme = match scheme {
            0 => Scheme::C0,
            1 => Scheme::C1,
            2 => Scheme::C2,
            3 => Scheme::C3,
            other => {
                set_error(format!("unknown scheme code {other} (0-3)"));
                return FoStatus::FoStatusInvalidArg;
            }
        };
        match construct_direct(scheme, n, m, &ConstructOptions::default()) {
            Ok(built) => {
                let design = built.half.foldover().into_design();
                unsafe { *out = Box::into_raw(Box::new(FoDesign { inner: design })) };
                FoStatus::FoStatusOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Appends `n_add` Bayesian-A optimal runs to a pure foldover design,
/// returning a new handle. The input handle is untouched.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fo_augment(
    design: *const FoDesign,
    n_add: usize,
    tau2: f64,
    model: i32,
    starts: usize,
    seed: u64,
    out: *mut *mut FoDesign,
) -> FoStatus {
    guarded(|| {
        let Some(design) = (unsafe { design.as_ref() }) else {
            set_error("null design handle");
            return FoStatus::FoStatusNullPointer;
        };
        if out.is_null() {
            set_error("null output pointer");
            return FoStatus::FoStatusNullPointer;
        }
        if design.inner.n_augmented() > 0 {
            set_error("design already carries augmented runs");
            return FoStatus::FoStatusInvalidArg;
        }
        let order = match model_of(model) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let cfg = AugmentConfig {
            n_add,
            tau2,
            model: order,
            n_starts: starts,
            seed,
            max_sweeps: 50,
        };
        match augment(design.inner.base(), &cfg) {
            Ok(outcome) => {
                unsafe {
                    *out = Box::into_raw(Box::new(FoDesign { inner: outcome.design }))
                };
                FoStatus::FoStatusOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Analyzes experimental data with the two-stage procedure and returns the
/// JSON report. The returned string must be freed with `fo_string_free`.
/// `criterion` accepts the same spellings as the CLI (`mbic`, `bic`, ...).
///
/// # Safety
/// Pointers must be valid; `y` must hold one response per design run.
#[no_mangle]
pub unsafe extern "C" fn fo_analyze_json(
    design: *const FoDesign,
    y: *const f64,
    y_len: usize,
    alpha: f64,
    model: i32,
    criterion: *const c_char,
    out: *mut *mut c_char,
) -> FoStatus {
    guarded(|| {
        let Some(design) = (unsafe { design.as_ref() }) else {
            set_error("null design handle");
            return FoStatus::FoStatusNullPointer;
        };
        if y.is_null() || out.is_null() {
            set_error("null pointer argument");
            return FoStatus::FoStatusNullPointer;
        }
        let order = match model_of(model) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let crit_str = if criterion.is_null() {
            "mbic".to_string()
        } else {
            match unsafe { CStr::from_ptr(criterion) }.to_str() {
                Ok(s) => s.to_string(),
                Err(_) => {
                    set_error("criterion is not valid UTF-8");
                    return FoStatus::FoStatusUtf8;
                }
            }
        };
        let crit = match SelectionCriterion::parse(&crit_str) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        let responses = unsafe { std::slice::from_raw_parts(y, y_len) };
        match foldover::analysis::augmented_analysis(responses, &design.inner, alpha, order, crit)
        {
            Ok(analysis) => {
                let json =
                    serde_json::to_string(&analysis).unwrap_or_else(|_| "{}".to_string());
                let c = std::ffi::CString::new(json).unwrap_or_default();
                unsafe { *out = c.into_raw() };
                FoStatus::FoStatusOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn fo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { std::ffi::CString::from_raw(s) });
    }
}

/// Fills `buf` (row-major, `order`·`order` entries) with a normalized
/// Hadamard matrix.
///
/// # Safety
/// `buf` must point to at least `buf_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fo_hadamard(order: usize, buf: *mut i8, buf_len: usize) -> FoStatus {
    guarded(|| {
        if buf.is_null() {
            set_error("null buffer");
            return FoStatus::FoStatusNullPointer;
        }
        if buf_len < order * order {
            set_error(format!(
                "buffer holds {buf_len} entries but order {order} needs {}",
                order * order
            ));
            return FoStatus::FoStatusInvalidArg;
        }
        match hadamard(order) {
            Ok(h) => {
                for (i, row) in h.iter().enumerate() {
                    for (j, &e) in row.iter().enumerate() {
                        unsafe { *buf.add(i * order + j) = e };
                    }
                }
                FoStatus::FoStatusOk
            }
            Err(e) => fail(e),
        }
    })
}
