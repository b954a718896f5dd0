//! C interface to `irs-capacity`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` calls and
//! released with the matching `*_free`. Every fallible call returns an
//! `int32_t` status; on failure the message is kept per thread and can be
//! copied out with [`irs_last_error_message`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use irs_capacity::capacity::{ergodic_capacity, DEFAULT_TOL};
use irs_capacity::channel::EnsembleDims;
use irs_capacity::eigenpdf::MarginalEigenPDF;
use irs_capacity::experiment::{run_optimize, ExperimentConfig};
use irs_capacity::optimizer::Termination;
use irs_capacity::Error;

pub const IRS_OK: i32 = 0;
/// A required pointer argument was null.
pub const IRS_ERR_NULL: i32 = 1;
/// An argument was outside its domain.
pub const IRS_ERR_DOMAIN: i32 = 2;
/// The configuration could not be parsed or validated.
pub const IRS_ERR_CONFIG: i32 = 3;
pub const IRS_ERR_NUMERICAL: i32 = 4;
pub const IRS_ERR_QUADRATURE: i32 = 5;
pub const IRS_ERR_IO: i32 = 6;
/// The optimiser's line search stalled; outputs are still written.
pub const IRS_ERR_STALLED: i32 = 7;
/// Internal panic; the handle arguments should be considered unusable.
pub const IRS_ERR_PANIC: i32 = 99;

/// Parsed experiment configuration.
pub struct IrsConfig {
    inner: ExperimentConfig,
}

/// Marginal eigenvalue density for fixed gains.
pub struct IrsPdf {
    inner: MarginalEigenPDF,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) => IRS_ERR_DOMAIN,
        Error::Config(_) => IRS_ERR_CONFIG,
        Error::Numerical(_) => IRS_ERR_NUMERICAL,
        Error::Quadrature { .. } => IRS_ERR_QUADRATURE,
        Error::Io(_) => IRS_ERR_IO,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F>(f: F) -> i32
where
    F: FnOnce() -> Result<i32, (i32, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(c)) => c,
        Ok(Err((c, msg))) => {
            set_error(msg);
            c
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            IRS_ERR_PANIC
        }
    }
}

fn lib(e: Error) -> (i32, String) {
    (code(&e), e.to_string())
}

fn null(what: &str) -> (i32, String) {
    (IRS_ERR_NULL, format!("{what} is null"))
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len` bytes. Returns the full message
/// length excluding the terminator, so a call with `len == 0` sizes the
/// buffer.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn irs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer; the handle written there is owned by the
/// caller and released with [`irs_config_free`].
#[no_mangle]
pub unsafe extern "C" fn irs_config_new_default(out: *mut *mut IrsConfig) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(IrsConfig { inner: ExperimentConfig::default() }));
        Ok(IRS_OK)
    })
}

/// Parses and validates a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_config_from_json(json: *const c_char, out: *mut *mut IrsConfig) -> i32 {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (IRS_ERR_CONFIG, format!("config is not UTF-8: {e}")))?;
        let cfg = ExperimentConfig::from_json(text).map_err(lib)?;
        cfg.validate().map_err(lib)?;
        *out = Box::into_raw(Box::new(IrsConfig { inner: cfg }));
        Ok(IRS_OK)
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn irs_config_free(cfg: *mut IrsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Number of paired IRS elements `q`, i.e. the phase-vector length.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_config_num_phases(cfg: *const IrsConfig, out: *mut usize) -> i32 {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = cfg.inner.ensemble_dims().q;
        Ok(IRS_OK)
    })
}

/// Density for explicit ensemble dimensions `(a, q, p)` and `q` gains.
///
/// # Safety
/// `gammas` must point to `q` readable doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn irs_pdf_new(a: usize, q: usize, p: usize, gammas: *const f64, out: *mut *mut IrsPdf) -> i32 {
    guard(|| {
        if gammas.is_null() {
            return Err(null("gammas"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dims = EnsembleDims::new(a, q, p).map_err(lib)?;
        let g = std::slice::from_raw_parts(gammas, q);
        let pdf = MarginalEigenPDF::from_gammas(dims, g).map_err(lib)?;
        *out = Box::into_raw(Box::new(IrsPdf { inner: pdf }));
        Ok(IRS_OK)
    })
}

/// Density at the gains a configuration implies for its configured phases.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_pdf_from_config(cfg: *const IrsConfig, out: *mut *mut IrsPdf) -> i32 {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let gains = cfg.inner.gains().map_err(lib)?;
        let pdf = MarginalEigenPDF::new(cfg.inner.ensemble_dims(), &gains).map_err(lib)?;
        *out = Box::into_raw(Box::new(IrsPdf { inner: pdf }));
        Ok(IRS_OK)
    })
}

/// # Safety
/// `pdf` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn irs_pdf_free(pdf: *mut IrsPdf) {
    if !pdf.is_null() {
        drop(Box::from_raw(pdf));
    }
}

/// Mean eigenvalue.
///
/// # Safety
/// `pdf` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_pdf_mean(pdf: *const IrsPdf, out: *mut f64) -> i32 {
    guard(|| {
        let pdf = pdf.as_ref().ok_or_else(|| null("pdf"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = pdf.inner.mean();
        Ok(IRS_OK)
    })
}

/// Evaluates the density at `n` points; `values` receives `n` doubles.
///
/// # Safety
/// `lambdas` must point to `n` readable and `values` to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn irs_pdf_density(pdf: *const IrsPdf, lambdas: *const f64, n: usize, values: *mut f64) -> i32 {
    guard(|| {
        let pdf = pdf.as_ref().ok_or_else(|| null("pdf"))?;
        if n == 0 {
            return Ok(IRS_OK);
        }
        if lambdas.is_null() {
            return Err(null("lambdas"));
        }
        if values.is_null() {
            return Err(null("values"));
        }
        let xs = std::slice::from_raw_parts(lambdas, n);
        let ys = std::slice::from_raw_parts_mut(values, n);
        for (x, y) in xs.iter().zip(ys.iter_mut()) {
            *y = pdf.inner.density(*x).map_err(lib)?;
        }
        Ok(IRS_OK)
    })
}

/// Ergodic capacity in bit/s/Hz for `m_tx` transmit antennas at linear SNR
/// `snr`. A non-positive `tol` selects the library default. `abs_err` may be
/// null.
///
/// # Safety
/// `pdf` must be a live handle, `ec` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_ergodic_capacity(
    pdf: *const IrsPdf,
    snr: f64,
    m_tx: usize,
    tol: f64,
    ec: *mut f64,
    abs_err: *mut f64,
) -> i32 {
    guard(|| {
        let pdf = pdf.as_ref().ok_or_else(|| null("pdf"))?;
        if ec.is_null() {
            return Err(null("ec"));
        }
        let tol = if tol > 0.0 { tol } else { DEFAULT_TOL };
        let r = ergodic_capacity(&pdf.inner, snr, m_tx, tol).map_err(lib)?;
        *ec = r.ec_bits;
        if !abs_err.is_null() {
            *abs_err = r.quad_abs_err;
        }
        Ok(IRS_OK)
    })
}

/// Optimises the IRS phases at the configuration's first SNR. `phases`
/// receives `len` values, which must equal [`irs_config_num_phases`];
/// `objective` and `iterations` may be null. Returns [`IRS_ERR_STALLED`]
/// with all outputs written when the line search stalled.
///
/// # Safety
/// `cfg` must be a live handle and `phases` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn irs_optimize(
    cfg: *const IrsConfig,
    phases: *mut f64,
    len: usize,
    objective: *mut f64,
    iterations: *mut usize,
) -> i32 {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if phases.is_null() {
            return Err(null("phases"));
        }
        let q = cfg.inner.ensemble_dims().q;
        if len != q {
            return Err((IRS_ERR_DOMAIN, format!("phase buffer holds {len} values, need {q}")));
        }
        let outcome = run_optimize(&cfg.inner).map_err(lib)?;
        std::slice::from_raw_parts_mut(phases, len).copy_from_slice(outcome.phases.as_slice());
        if !objective.is_null() {
            *objective = outcome.objective;
        }
        if !iterations.is_null() {
            *iterations = outcome.trace.len() - 1;
        }
        if outcome.termination == Termination::Stalled {
            return Err((IRS_ERR_STALLED, "line search stalled".to_string()));
        }
        Ok(IRS_OK)
    })
}
