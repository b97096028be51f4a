//! C ABI for `alpn-socp`.
//!
//! Instances and reports are opaque heap handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns
//! an [`AlpnErrorCode`]; on failure a description is available from
//! [`alpn_last_error_message`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use alpn_socp::io::{read_instance, write_instance, write_report, ReportFormat};
use alpn_socp::{gen, solve, AlpnError, ConeStructure, SocpInstance, SolveReport, SolveStatus, SolverParams};
use nalgebra::{DMatrix, DVector};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlpnErrorCode {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Numerical = 5,
    NoCertificate = 6,
    Panic = 7,
}

/// Termination status of a solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlpnSolveStatus {
    Optimal = 0,
    RelaxationUnbounded = 1,
    DualUnbounded = 2,
    IterationLimit = 3,
    NumericalFailure = 4,
}

impl From<SolveStatus> for AlpnSolveStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => AlpnSolveStatus::Optimal,
            SolveStatus::RelaxationUnbounded => AlpnSolveStatus::RelaxationUnbounded,
            SolveStatus::DualUnbounded => AlpnSolveStatus::DualUnbounded,
            SolveStatus::IterationLimit => AlpnSolveStatus::IterationLimit,
            SolveStatus::NumericalFailure => AlpnSolveStatus::NumericalFailure,
        }
    }
}

/// Solver settings. Start from [`alpn_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlpnParams {
    pub tol_feas: f64,
    pub tol_qp: f64,
    pub tol_lin: f64,
    /// 0 selects the default cap.
    pub max_outer_iterations: usize,
    /// Used only when `has_gamma0` is nonzero.
    pub gamma0: f64,
    pub has_gamma0: i32,
}

/// Opaque problem instance.
pub struct AlpnInstance {
    inner: SocpInstance,
}

/// Opaque solve result.
pub struct AlpnReport {
    inner: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn code_of(err: &AlpnError) -> AlpnErrorCode {
    match err {
        AlpnError::Io(_) => AlpnErrorCode::Io,
        AlpnError::Parse { .. } | AlpnError::Shape { .. } | AlpnError::Version { .. } => AlpnErrorCode::Parse,
        AlpnError::NumericalFailure(_) | AlpnError::InnerIterationLimit(_) => AlpnErrorCode::Numerical,
        _ => AlpnErrorCode::InvalidArgument,
    }
}

fn fail(code: AlpnErrorCode, msg: impl Into<String>) -> AlpnErrorCode {
    set_error(msg);
    code
}

fn guard(f: impl FnOnce() -> Result<(), AlpnErrorCode>) -> AlpnErrorCode {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AlpnErrorCode::Ok,
        Ok(Err(code)) => code,
        Err(_) => fail(AlpnErrorCode::Panic, "internal panic"),
    }
}

fn lift(err: AlpnError) -> AlpnErrorCode {
    fail(code_of(&err), err.to_string())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], AlpnErrorCode> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(AlpnErrorCode::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, AlpnErrorCode> {
    if p.is_null() {
        return Err(fail(AlpnErrorCode::NullPointer, "`path` is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| fail(AlpnErrorCode::InvalidArgument, "`path` is not valid UTF-8"))
}

unsafe fn out_arg<T>(out: *mut *mut T) -> Result<(), AlpnErrorCode> {
    if out.is_null() {
        return Err(fail(AlpnErrorCode::NullPointer, "output pointer is null"));
    }
    *out = ptr::null_mut();
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, AlpnErrorCode> {
    p.as_ref().ok_or_else(|| fail(AlpnErrorCode::NullPointer, "handle is null"))
}

/// Message describing the last failure on this thread, or null. The string
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn alpn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn alpn_params_default() -> AlpnParams {
    let d = SolverParams::default();
    AlpnParams {
        tol_feas: d.tol_feas,
        tol_qp: d.tol_qp,
        tol_lin: d.tol_lin,
        max_outer_iterations: 0,
        gamma0: 0.0,
        has_gamma0: 0,
    }
}

/// Builds an instance from a row-major `m x n` matrix `a`, `b` of length
/// `m`, `c` of length `n` and `p` block sizes summing to `n`.
///
/// # Safety
/// Every pointer must be valid for the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn alpn_instance_new(
    m: usize,
    n: usize,
    a: *const f64,
    b: *const f64,
    c: *const f64,
    dims: *const usize,
    p: usize,
    out: *mut *mut AlpnInstance,
) -> AlpnErrorCode {
    guard(|| {
        out_arg(out)?;
        let a = slice(a, m.checked_mul(n).ok_or(AlpnErrorCode::InvalidArgument)?, "a")?;
        let b = slice(b, m, "b")?;
        let c = slice(c, n, "c")?;
        let dims = slice(dims, p, "dims")?;
        let cone = ConeStructure::new(dims.to_vec()).map_err(lift)?;
        if cone.n() != n {
            return Err(fail(AlpnErrorCode::InvalidArgument, format!("dims sum to {} but n = {n}", cone.n())));
        }
        let inner = SocpInstance::new(
            DMatrix::from_row_slice(m, n, a),
            DVector::from_column_slice(b),
            DVector::from_column_slice(c),
            cone,
        )
        .map_err(lift)?;
        *out = Box::into_raw(Box::new(AlpnInstance { inner }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn alpn_instance_read(path: *const c_char, out: *mut *mut AlpnInstance) -> AlpnErrorCode {
    guard(|| {
        out_arg(out)?;
        let inner = read_instance(path_arg(path)?).map_err(lift)?;
        *out = Box::into_raw(Box::new(AlpnInstance { inner }));
        Ok(())
    })
}

/// # Safety
/// `instance` must come from this library and `path` be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn alpn_instance_write(instance: *const AlpnInstance, path: *const c_char) -> AlpnErrorCode {
    guard(|| {
        let inst = handle(instance)?;
        write_instance(&inst.inner, path_arg(path)?).map_err(lift)
    })
}

/// Random instance with `m` rows and `p` blocks, deterministic in `seed`.
///
/// # Safety
/// `dims` must hold `p` elements and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn alpn_instance_generate(
    m: usize,
    dims: *const usize,
    p: usize,
    seed: u64,
    out: *mut *mut AlpnInstance,
) -> AlpnErrorCode {
    guard(|| {
        out_arg(out)?;
        let dims = slice(dims, p, "dims")?;
        let g = gen::generate(m, dims, seed).map_err(lift)?;
        *out = Box::into_raw(Box::new(AlpnInstance { inner: g.instance }));
        Ok(())
    })
}

/// Number of equality constraints, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn alpn_instance_m(instance: *const AlpnInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.m())
}

/// Number of variables, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn alpn_instance_n(instance: *const AlpnInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.n())
}

/// # Safety
/// `instance` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn alpn_instance_free(instance: *mut AlpnInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Solves `instance`. `params` may be null for defaults. A report is produced
/// for every termination status, so check [`alpn_report_status`].
///
/// # Safety
/// Handles must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn alpn_solve(
    instance: *const AlpnInstance,
    params: *const AlpnParams,
    out: *mut *mut AlpnReport,
) -> AlpnErrorCode {
    guard(|| {
        out_arg(out)?;
        let inst = handle(instance)?;
        let mut sp = SolverParams::default();
        if let Some(p) = params.as_ref() {
            sp.tol_feas = p.tol_feas;
            sp.tol_qp = p.tol_qp;
            sp.tol_lin = p.tol_lin;
            sp.max_outer_iterations = (p.max_outer_iterations > 0).then_some(p.max_outer_iterations);
            sp.gamma0 = (p.has_gamma0 != 0).then_some(p.gamma0);
        }
        let inner = solve(&inst.inner, &sp).map_err(lift)?;
        *out = Box::into_raw(Box::new(AlpnReport { inner }));
        Ok(())
    })
}

/// # Safety
/// `report` must be a valid handle and `status` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn alpn_report_status(report: *const AlpnReport, status: *mut AlpnSolveStatus) -> AlpnErrorCode {
    guard(|| {
        let r = handle(report)?;
        let s = status.as_mut().ok_or_else(|| fail(AlpnErrorCode::NullPointer, "`status` is null"))?;
        *s = r.inner.status.into();
        Ok(())
    })
}

/// Objective `c'x`, or NaN for a null handle.
///
/// # Safety
/// `report` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn alpn_report_objective(report: *const AlpnReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.inner.objective)
}

/// Outer iterations performed, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn alpn_report_iterations(report: *const AlpnReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.iterations)
}

/// Initial and final hyperplane counts of the outer approximation.
///
/// # Safety
/// `report` must be a valid handle; the outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn alpn_report_hyperplanes(
    report: *const AlpnReport,
    initial: *mut usize,
    final_: *mut usize,
) -> AlpnErrorCode {
    guard(|| {
        let r = handle(report)?;
        if initial.is_null() || final_.is_null() {
            return Err(fail(AlpnErrorCode::NullPointer, "output pointer is null"));
        }
        *initial = r.inner.initial_hyperplanes;
        *final_ = r.inner.final_hyperplanes;
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), AlpnErrorCode> {
    if len != src.len() {
        return Err(fail(AlpnErrorCode::InvalidArgument, format!("buffer length {len}, expected {}", src.len())));
    }
    if len > 0 {
        if buf.is_null() {
            return Err(fail(AlpnErrorCode::NullPointer, "`buf` is null"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
    }
    Ok(())
}

/// Copies the primal point into `buf`, which must hold exactly `n` values.
///
/// # Safety
/// `report` must be a valid handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn alpn_report_x(report: *const AlpnReport, buf: *mut f64, len: usize) -> AlpnErrorCode {
    guard(|| copy_out(handle(report)?.inner.x.as_slice(), buf, len))
}

/// Copies the dual multipliers into `buf` (exactly `m` values). Fails with
/// `NoCertificate` when the solve produced none.
///
/// # Safety
/// `report` must be a valid handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn alpn_report_y(report: *const AlpnReport, buf: *mut f64, len: usize) -> AlpnErrorCode {
    guard(|| {
        let r = handle(report)?;
        let cert =
            r.inner.certificate.as_ref().ok_or_else(|| fail(AlpnErrorCode::NoCertificate, "no dual certificate"))?;
        copy_out(cert.y.as_slice(), buf, len)
    })
}

/// Writes the report; `csv_log` nonzero selects the iteration log format.
///
/// # Safety
/// `report` must be a valid handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn alpn_report_write(
    report: *const AlpnReport,
    path: *const c_char,
    csv_log: i32,
) -> AlpnErrorCode {
    guard(|| {
        let r = handle(report)?;
        let format = if csv_log != 0 { ReportFormat::CsvLog } else { ReportFormat::Structured };
        write_report(&r.inner, path_arg(path)?, format).map_err(lift)
    })
}

/// # Safety
/// `report` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn alpn_report_free(report: *mut AlpnReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
