//! C ABI over the `isoflow` crate.
//!
//! Matrices cross the boundary as row-major `double` arrays, or behind an
//! opaque [`IsoMatrix`] handle. Tridiagonal matrices are passed as their
//! diagonal `a` (length `n`) and off-diagonal `b` (length `n - 1`).
//!
//! Every function returns an [`IsoStatus`]. On failure the message is kept
//! per thread and can be read with [`isoflow_last_error_message`]. Panics
//! never cross the boundary; they are reported as `ISO_STATUS_PANIC`.
//! Output buffers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use isoflow::billiard::{self, BilliardState, Ellipsoid};
use isoflow::qrdyn::{qr_iterate, ShiftStrategy, Termination};
use isoflow::{atlas, flows, invspec, linalg, DenseMatrix, Error, FlowFunction, SymTridiagonal};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// The flow function is undefined somewhere on the spectrum.
    Domain = 3,
    /// Outside a factorization or chart domain.
    NotInDomain = 4,
    Degenerate = 5,
    Convergence = 6,
    Numerical = 7,
    Consistency = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoStepMethod {
    Geometric = 0,
    MoserVeselov = 1,
}

/// Opaque dense square matrix.
pub struct IsoMatrix(DenseMatrix);

/// Opaque billiard table.
pub struct IsoEllipsoid(Ellipsoid);

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn status_of(e: &Error) -> IsoStatus {
    match e {
        Error::InvalidInput(_) | Error::Io(_) => IsoStatus::InvalidInput,
        Error::Domain(_) => IsoStatus::Domain,
        Error::NotInDomain { .. } | Error::NotInChartDomain { .. } => IsoStatus::NotInDomain,
        Error::Degenerate(_)
        | Error::NumericalDegeneracy(_)
        | Error::DegenerateTrajectory(_)
        | Error::ImmediateDeflation { .. } => IsoStatus::Degenerate,
        Error::Convergence { .. } => IsoStatus::Convergence,
        Error::Factorization(_)
        | Error::Integration { .. }
        | Error::Range(_)
        | Error::Reconstruction { .. }
        | Error::NotEnoughData(_) => IsoStatus::Numerical,
        Error::Consistency(_) => IsoStatus::Consistency,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> IsoStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => IsoStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            IsoStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            IsoStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn text(p: *const c_char, what: &'static str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::Core(Error::InvalidInput(format!("{what} is not valid UTF-8"))))
}

fn nonzero(n: usize) -> Result<(), Failure> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()).into());
    }
    Ok(())
}

unsafe fn read_tridiagonal(a: *const f64, b: *const f64, n: usize) -> Result<SymTridiagonal, Failure> {
    nonzero(n)?;
    let a = input(a, n, "a")?.to_vec();
    let b = input(b, n - 1, "b")?.to_vec();
    Ok(SymTridiagonal::new(a, b)?)
}

unsafe fn write_tridiagonal(t: &SymTridiagonal, a_out: *mut f64, b_out: *mut f64) -> Result<(), Failure> {
    let n = t.dim();
    let a = output(a_out, n, "a_out")?;
    let b = output(b_out, n - 1, "b_out")?;
    a.copy_from_slice(t.a());
    b.copy_from_slice(t.b());
    Ok(())
}

unsafe fn store_matrix(m: DenseMatrix, out: *mut *mut IsoMatrix) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(IsoMatrix(m)));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn isoflow_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn isoflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies an `n × n` row-major array into a new handle.
///
/// # Safety
/// `data` must point to `n * n` doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn isoflow_matrix_new(n: usize, data: *const f64, out: *mut *mut IsoMatrix) -> IsoStatus {
    guard(|| {
        nonzero(n)?;
        let len = n.checked_mul(n).ok_or(Error::InvalidInput("dimension overflow".into()))?;
        let m = DenseMatrix::from_row_major(n, input(data, len, "data")?.to_vec())?;
        store_matrix(m, out)
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `m` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn isoflow_matrix_free(m: *mut IsoMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dimension of the matrix, 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isoflow_matrix_dim(m: *const IsoMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// Copies the entries row-major into `data`, which holds `len` doubles;
/// `len` must equal `n * n`.
///
/// # Safety
/// `m` must be a live handle and `data` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn isoflow_matrix_read(m: *const IsoMatrix, data: *mut f64, len: usize) -> IsoStatus {
    guard(|| {
        let m = handle(m, "m")?;
        let src = m.0.as_slice();
        if len != src.len() {
            return Err(Error::InvalidInput(format!("buffer holds {len} entries, matrix has {}", src.len())).into());
        }
        output(data, len, "data")?.copy_from_slice(src);
        Ok(())
    })
}

/// Ascending eigenvalues of a symmetric matrix into `values` (length `n`).
///
/// # Safety
/// `m` must be a live handle and `values` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn isoflow_eigenvalues(m: *const IsoMatrix, values: *mut f64) -> IsoStatus {
    guard(|| {
        let m = handle(m, "m")?;
        let vals = linalg::symmetric_eigenvalues(&m.0)?;
        output(values, vals.len(), "values")?.copy_from_slice(&vals);
        Ok(())
    })
}

/// Solves the flow `T' = [T, Π_sk f(T)]` at time `t` by factorization.
/// `f` is `identity`, `log`, `poly:c0,c1,...` or `shiftlog:s`.
///
/// # Safety
/// `s0` must be a live handle, `f` a NUL-terminated string and `out`
/// writable. The new handle must be released with `isoflow_matrix_free`.
#[no_mangle]
pub unsafe extern "C" fn isoflow_symes_solve(
    s0: *const IsoMatrix,
    f: *const c_char,
    t: f64,
    out: *mut *mut IsoMatrix,
) -> IsoStatus {
    guard(|| {
        let s0 = handle(s0, "s0")?;
        let f: FlowFunction = text(f, "f")?.parse()?;
        store_matrix(flows::symes_solve(&s0.0, &f, t)?, out)
    })
}

/// Integrates the same flow numerically to time `t` with local tolerance `tol`.
///
/// # Safety
/// As for [`isoflow_symes_solve`].
#[no_mangle]
pub unsafe extern "C" fn isoflow_integrate(
    s0: *const IsoMatrix,
    f: *const c_char,
    t: f64,
    tol: f64,
    out: *mut *mut IsoMatrix,
) -> IsoStatus {
    guard(|| {
        let s0 = handle(s0, "s0")?;
        let f: FlowFunction = text(f, "f")?.parse()?;
        let traj = flows::integrate_at(&s0.0, &f, &[t], tol)?;
        let last = traj
            .states
            .into_iter()
            .last()
            .ok_or(Error::Consistency("integrator returned no state".into()))?;
        store_matrix(last, out)
    })
}

/// Shifted QR iteration with deflation on a tridiagonal matrix.
/// `strategy` is `none`, `rayleigh`, `wilkinson` or `fixed:s`.
/// Writes ascending eigenvalue estimates to `eigenvalues` (length `n`), the
/// number of steps taken and whether every eigenvalue deflated. A run that
/// stops early still returns `ISO_STATUS_OK` with `converged` false.
///
/// # Safety
/// `a`, `b` must hold `n` and `n - 1` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn isoflow_qr_iterate(
    a: *const f64,
    b: *const f64,
    n: usize,
    strategy: *const c_char,
    deflation_tol: f64,
    max_steps: usize,
    eigenvalues: *mut f64,
    steps: *mut usize,
    converged: *mut bool,
) -> IsoStatus {
    guard(|| {
        let t = read_tridiagonal(a, b, n)?;
        let strategy: ShiftStrategy = text(strategy, "strategy")?.parse()?;
        let ev = output(eigenvalues, n, "eigenvalues")?;
        if steps.is_null() {
            return Err(Failure::Null("steps"));
        }
        if converged.is_null() {
            return Err(Failure::Null("converged"));
        }
        let (vals, trace) = qr_iterate(&t, strategy, deflation_tol, max_steps)?;
        ev.copy_from_slice(&vals);
        *steps = trace.step_count();
        *converged = trace.converged && matches!(trace.termination, Termination::Converged);
        Ok(())
    })
}

/// Ascending eigenvalues and positive unit norming constants of a Jacobi
/// matrix (all `b > 0`).
///
/// # Safety
/// `a`, `b` must hold `n` and `n - 1` doubles; `lambdas`, `v` hold `n`.
#[no_mangle]
pub unsafe extern "C" fn isoflow_norming_constants(
    a: *const f64,
    b: *const f64,
    n: usize,
    lambdas: *mut f64,
    v: *mut f64,
) -> IsoStatus {
    guard(|| {
        let t = read_tridiagonal(a, b, n)?;
        let l_out = output(lambdas, n, "lambdas")?;
        let v_out = output(v, n, "v")?;
        let sd = invspec::norming_constants(&t)?;
        l_out.copy_from_slice(sd.lambdas());
        v_out.copy_from_slice(sd.v());
        Ok(())
    })
}

/// The Jacobi matrix with the given spectrum and norming constants.
/// `lambdas` must be strictly increasing; `v` positive, rescaled to unit norm.
///
/// # Safety
/// `lambdas`, `v`, `a_out` hold `n` doubles, `b_out` holds `n - 1`.
#[no_mangle]
pub unsafe extern "C" fn isoflow_reconstruct(
    lambdas: *const f64,
    v: *const f64,
    n: usize,
    a_out: *mut f64,
    b_out: *mut f64,
) -> IsoStatus {
    guard(|| {
        nonzero(n)?;
        let l = input(lambdas, n, "lambdas")?.to_vec();
        let v = input(v, n, "v")?.to_vec();
        let sd = invspec::SpectralData::normalized(l, v)?;
        let t = invspec::reconstruct(&sd)?;
        write_tridiagonal(&t, a_out, b_out)
    })
}

/// Bidiagonal coordinates of a tridiagonal matrix in the chart of the
/// permutation `pi` (0-based, length `n`). Writes the ascending spectrum
/// to `lambdas` and the `n - 1` chart coordinates to `betas`.
///
/// # Safety
/// `a`, `pi`, `lambdas` hold `n` entries; `b`, `betas` hold `n - 1`.
#[no_mangle]
pub unsafe extern "C" fn isoflow_to_chart(
    a: *const f64,
    b: *const f64,
    n: usize,
    pi: *const usize,
    lambdas: *mut f64,
    betas: *mut f64,
) -> IsoStatus {
    guard(|| {
        let t = read_tridiagonal(a, b, n)?;
        let pi = input(pi, n, "pi")?;
        let l_out = output(lambdas, n, "lambdas")?;
        let b_out = output(betas, n - 1, "betas")?;
        let c = atlas::to_chart(&t, pi)?;
        l_out.copy_from_slice(c.lambdas());
        b_out.copy_from_slice(c.betas());
        Ok(())
    })
}

/// Inverse of [`isoflow_to_chart`].
///
/// # Safety
/// `lambdas`, `pi`, `a_out` hold `n` entries; `betas`, `b_out` hold `n - 1`.
#[no_mangle]
pub unsafe extern "C" fn isoflow_from_chart(
    lambdas: *const f64,
    pi: *const usize,
    betas: *const f64,
    n: usize,
    a_out: *mut f64,
    b_out: *mut f64,
) -> IsoStatus {
    guard(|| {
        nonzero(n)?;
        let c = atlas::BidiagonalChart::new(
            input(pi, n, "pi")?.to_vec(),
            input(lambdas, n, "lambdas")?.to_vec(),
            input(betas, n - 1, "betas")?.to_vec(),
        )?;
        let t = atlas::from_chart(&c)?;
        write_tridiagonal(&t, a_out, b_out)
    })
}

/// Ellipsoid `{x : |C⁻¹x| = 1}` for a symmetric positive definite `C`
/// given row-major.
///
/// # Safety
/// `c` must hold `n * n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isoflow_ellipsoid_new(n: usize, c: *const f64, out: *mut *mut IsoEllipsoid) -> IsoStatus {
    guard(|| {
        nonzero(n)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let len = n.checked_mul(n).ok_or(Error::InvalidInput("dimension overflow".into()))?;
        let c = DenseMatrix::from_row_major(n, input(c, len, "c")?.to_vec())?;
        *out = Box::into_raw(Box::new(IsoEllipsoid(Ellipsoid::new(c)?)));
        Ok(())
    })
}

/// Releases an ellipsoid. NULL is ignored.
///
/// # Safety
/// `e` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn isoflow_ellipsoid_free(e: *mut IsoEllipsoid) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// One bounce from boundary point `x` with inward unit direction `y`.
/// Writes the next hit point and direction.
///
/// # Safety
/// `e` must be a live handle; every array holds `n` doubles, `n` being the
/// ellipsoid dimension.
#[no_mangle]
pub unsafe extern "C" fn isoflow_billiard_step(
    e: *const IsoEllipsoid,
    method: IsoStepMethod,
    x: *const f64,
    y: *const f64,
    x_out: *mut f64,
    y_out: *mut f64,
) -> IsoStatus {
    guard(|| {
        let e = &handle(e, "e")?.0;
        let n = e.dim();
        let st = BilliardState::new(e, input(x, n, "x")?.to_vec(), input(y, n, "y")?.to_vec())?;
        let xo = output(x_out, n, "x_out")?;
        let yo = output(y_out, n, "y_out")?;
        let next = match method {
            IsoStepMethod::Geometric => billiard::geometric_step(e, &st)?,
            IsoStepMethod::MoserVeselov => billiard::mv_step(e, &st)?,
        };
        xo.copy_from_slice(&next.x);
        yo.copy_from_slice(&next.y);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let p = isoflow_last_error_message();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::NotInChartDomain { minor: 2 }), IsoStatus::NotInDomain);
        assert_eq!(status_of(&Error::Domain("log".into())), IsoStatus::Domain);
        assert_eq!(status_of(&Error::Reconstruction { step: 1 }), IsoStatus::Numerical);
        assert_eq!(status_of(&Error::ImmediateDeflation { eigenvalue: 1.0 }), IsoStatus::Degenerate);
    }

    #[test]
    fn panic_is_caught() {
        let st = guard(|| panic!("boom"));
        assert_eq!(st, IsoStatus::Panic);
        assert!(last_error().contains("boom"));
        assert_eq!(guard(|| Ok(())), IsoStatus::Ok);
        assert!(isoflow_last_error_message().is_null());
    }

    #[test]
    fn null_arguments() {
        let mut out = ptr::null_mut();
        let st = unsafe { isoflow_matrix_new(2, ptr::null(), &mut out) };
        assert_eq!(st, IsoStatus::NullPointer);
        assert!(out.is_null());
        assert!(last_error().contains("data"));
        assert_eq!(unsafe { isoflow_matrix_dim(ptr::null()) }, 0);
        unsafe { isoflow_matrix_free(ptr::null_mut()) };
    }

    #[test]
    fn version_string() {
        let v = unsafe { CStr::from_ptr(isoflow_version()) }.to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
