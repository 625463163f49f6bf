//! C ABI over `rcgain`.
//!
//! Systems and plant sessions are opaque heap handles created by `rcg_*_new`
//! style constructors and released with the matching `*_free`. Every call
//! returns an [`RcgStatus`]; on failure [`rcg_last_error`] gives a message for
//! the calling thread. Panics are caught at the boundary and reported as
//! `RCG_STATUS_INTERNAL`.
//!
//! Array arguments are `(pointer, length)` pairs. Output arrays must hold at
//! least the documented number of elements, otherwise
//! `RCG_STATUS_BUFFER_TOO_SMALL` is returned and nothing is written.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rcgain::estimator::{PowerIterationConfig, IDEAL_PLANT_TOL, TRANSIENT_PLANT_TOL};
use rcgain::lifting::{circulant_coefficients, markov_matrix};
use rcgain::lti::{hinf_grid_oracle, parse_system_spec};
use rcgain::nalgebra::{DMatrix, DVector};
use rcgain::plant::{BatchExperiment, PlantMode, PlantSession};
use rcgain::spectral::{circulant_eigenvalues, reset_based_gain, reversed_spectrum};
use rcgain::{harness, Error, FrequencyResponse, RationalTransferFunction, StateSpace, SystemModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Unstable = 4,
    Singular = 5,
    NonConvergence = 6,
    Parse = 7,
    Io = 8,
    BufferTooSmall = 9,
    DegenerateUpdate = 10,
    Internal = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcgPlantMode {
    ResetFree = 0,
    ResetPerBatch = 1,
}

/// Opaque stable LTI system.
pub struct RcgSystem(SystemModel);

/// Opaque simulated plant session.
pub struct RcgSession(PlantSession);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RcgEstimateOptions {
    pub batch_len: usize,
    pub n_update: usize,
    pub max_updates: usize,
    pub seed: u64,
    /// 0 selects the shift from a probe experiment.
    pub shift: f64,
    /// 0 selects the default for the chosen plant.
    pub tolerance: f64,
    /// Nonzero uses the transient-free plant `y = M u`.
    pub ideal_plant: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RcgEstimateResult {
    pub estimate: f64,
    /// Largest eigenvalue of the time-reversed periodic response matrix.
    pub reference: f64,
    pub shift: f64,
    pub updates: usize,
    pub converged: i32,
    pub peak_bin: usize,
    pub final_input_bin: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RcgStatus {
    match e {
        Error::Dimension(_) => RcgStatus::Dimension,
        Error::InvalidArgument(_) | Error::NotSymmetric { .. } | Error::NotRealSpectrum(_) => {
            RcgStatus::InvalidArgument
        }
        Error::Unstable { .. } => RcgStatus::Unstable,
        Error::Singular(_) => RcgStatus::Singular,
        Error::NonConvergence(_) => RcgStatus::NonConvergence,
        Error::DegenerateUpdate => RcgStatus::DegenerateUpdate,
        Error::Parse { .. } => RcgStatus::Parse,
        Error::Io(_) | Error::Csv(_) => RcgStatus::Io,
    }
}

struct Fail(RcgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RcgStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RcgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RcgStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RcgStatus::Internal
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], Fail> {
    if len < needed {
        return Err(Fail(RcgStatus::BufferTooSmall, format!("output needs {needed} elements, got {len}")));
    }
    if p.is_null() {
        return Err(null("output buffer"));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn system<'a>(sys: *const RcgSystem) -> Result<&'a SystemModel, Fail> {
    sys.as_ref().map(|s| &s.0).ok_or_else(|| null("system"))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next `rcg_*` call on the same thread.
#[no_mangle]
pub extern "C" fn rcg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Transfer function `z^-delay · Σ num_i z^-i / Σ den_i z^-i`.
///
/// # Safety
/// `num`/`den` must point to `num_len`/`den_len` readable doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcg_system_from_tf(
    num: *const f64,
    num_len: usize,
    den: *const f64,
    den_len: usize,
    delay: usize,
    out: *mut *mut RcgSystem,
) -> RcgStatus {
    guard(|| {
        let tf = RationalTransferFunction::new(
            slice(num, num_len, "num")?.to_vec(),
            slice(den, den_len, "den")?.to_vec(),
            delay,
        )?;
        put(out, Box::into_raw(Box::new(RcgSystem(SystemModel::Transfer(tf)))), "out")
    })
}

/// State-space system of order `n`; `a` is row-major `n × n`.
///
/// # Safety
/// `a` must hold `n*n` doubles, `b` and `c` `n` doubles each; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rcg_system_from_ss(
    a: *const f64,
    b: *const f64,
    c: *const f64,
    d: f64,
    n: usize,
    out: *mut *mut RcgSystem,
) -> RcgStatus {
    guard(|| {
        let a = DMatrix::from_row_slice(n, n, slice(a, n * n, "a")?);
        let b = DVector::from_column_slice(slice(b, n, "b")?);
        let c = DVector::from_column_slice(slice(c, n, "c")?);
        let ss = StateSpace::new(a, b, c, d)?;
        put(out, Box::into_raw(Box::new(RcgSystem(SystemModel::StateSpace(ss)))), "out")
    })
}

/// Parses the text system-spec format used by the CLI.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rcg_system_from_spec(text: *const c_char, out: *mut *mut RcgSystem) -> RcgStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Fail(RcgStatus::Parse, "spec is not valid UTF-8".into()))?;
        let model = parse_system_spec(text)?;
        put(out, Box::into_raw(Box::new(RcgSystem(model))), "out")
    })
}

/// # Safety
/// `sys` must come from an `rcg_system_from_*` call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rcg_system_free(sys: *mut RcgSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// `P(e^{jω})`.
///
/// # Safety
/// `sys` must be a live handle; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn rcg_freq_response(sys: *const RcgSystem, omega: f64, re: *mut f64, im: *mut f64) -> RcgStatus {
    guard(|| {
        let z = system(sys)?.freq_response(omega);
        put(re, z.re, "re")?;
        put(im, z.im, "im")
    })
}

/// Peak gain on a uniform `[0, π]` grid with local refinement.
///
/// # Safety
/// `sys` must be a live handle; `value` and `omega` writable.
#[no_mangle]
pub unsafe extern "C" fn rcg_hinf_oracle(
    sys: *const RcgSystem,
    grid: usize,
    value: *mut f64,
    omega: *mut f64,
) -> RcgStatus {
    guard(|| {
        let peak = hinf_grid_oracle(system(sys)?, grid)?;
        put(value, peak.value, "value")?;
        put(omega, peak.omega, "omega")
    })
}

/// First row of the periodic response matrix for batch length `n`; writes `n`
/// values.
///
/// # Safety
/// `sys` must be a live handle; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rcg_circulant_coefficients(
    sys: *const RcgSystem,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> RcgStatus {
    guard(|| {
        let spec = circulant_coefficients(&system(sys)?.to_state_space(), n)?;
        out_slice(out, out_len, n)?.copy_from_slice(spec.coeffs());
        Ok(())
    })
}

/// Eigenvalues of the time-reversed periodic response matrix, indexed by DFT
/// bin; writes `n` values.
///
/// # Safety
/// `sys` must be a live handle; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rcg_reversed_spectrum(
    sys: *const RcgSystem,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> RcgStatus {
    guard(|| {
        let spec = circulant_coefficients(&system(sys)?.to_state_space(), n)?;
        let rev = reversed_spectrum(&circulant_eigenvalues(&spec))?;
        out_slice(out, out_len, n)?.copy_from_slice(rev.values());
        Ok(())
    })
}

/// Largest eigenvalue of the time-reversed periodic response matrix.
///
/// # Safety
/// `sys` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rcg_reset_free_gain(sys: *const RcgSystem, n: usize, out: *mut f64) -> RcgStatus {
    guard(|| {
        let spec = circulant_coefficients(&system(sys)?.to_state_space(), n)?;
        put(out, reversed_spectrum(&circulant_eigenvalues(&spec))?.max().1, "out")
    })
}

/// Largest eigenvalue of the time-reversed finite-horizon Toeplitz matrix.
///
/// # Safety
/// `sys` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rcg_reset_based_gain(sys: *const RcgSystem, n: usize, out: *mut f64) -> RcgStatus {
    guard(|| {
        let j = markov_matrix(&system(sys)?.to_state_space(), n)?;
        put(out, reset_based_gain(&j)?, "out")
    })
}

/// Plant session started at rest.
///
/// # Safety
/// `sys` must be a live handle; `out` writable. The session keeps its own copy
/// of the system.
#[no_mangle]
pub unsafe extern "C" fn rcg_session_new(
    sys: *const RcgSystem,
    n: usize,
    mode: RcgPlantMode,
    out: *mut *mut RcgSession,
) -> RcgStatus {
    guard(|| {
        let mode = match mode {
            RcgPlantMode::ResetFree => PlantMode::ResetFree,
            RcgPlantMode::ResetPerBatch => PlantMode::ResetPerBatch,
        };
        let session = PlantSession::new(system(sys)?.to_state_space(), n, mode, None)?;
        put(out, Box::into_raw(Box::new(RcgSession(session))), "out")
    })
}

/// Applies one batch of `n` inputs and writes the `n` outputs.
///
/// # Safety
/// `session` must be live; `u` must hold `n` doubles; `y` `y_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rcg_session_apply(
    session: *mut RcgSession,
    u: *const f64,
    n: usize,
    y: *mut f64,
    y_len: usize,
) -> RcgStatus {
    guard(|| {
        let s = &mut session.as_mut().ok_or_else(|| null("session"))?.0;
        let rec = s.apply_batch(slice(u, n, "u")?)?;
        out_slice(y, y_len, rec.y.len())?.copy_from_slice(&rec.y);
        Ok(())
    })
}

/// Number of batches applied so far, or 0 for a null handle.
///
/// # Safety
/// `session` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn rcg_session_batches(session: *const RcgSession) -> usize {
    session.as_ref().map_or(0, |s| s.0.batches_applied())
}

/// # Safety
/// `session` must come from [`rcg_session_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rcg_session_free(session: *mut RcgSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Defaults: `n_update = 10`, `max_updates = 1000`, seed 0, automatic shift
/// and tolerance, transient plant.
#[no_mangle]
pub extern "C" fn rcg_estimate_options_default(batch_len: usize) -> RcgEstimateOptions {
    let c = PowerIterationConfig::new(batch_len);
    RcgEstimateOptions {
        batch_len,
        n_update: c.n_update,
        max_updates: c.max_updates,
        seed: c.seed,
        shift: 0.0,
        tolerance: 0.0,
        ideal_plant: 0,
    }
}

/// Reset-free power iteration on a simulated plant started at rest. The result
/// is filled even when the run stops without converging, in which case
/// `RCG_STATUS_NON_CONVERGENCE` is returned.
///
/// # Safety
/// `sys` must be live; `options` readable; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn rcg_estimate(
    sys: *const RcgSystem,
    options: *const RcgEstimateOptions,
    result: *mut RcgEstimateResult,
) -> RcgStatus {
    guard(|| {
        let model = system(sys)?;
        let o = *options.as_ref().ok_or_else(|| null("options"))?;
        if result.is_null() {
            return Err(null("result"));
        }
        let ideal = o.ideal_plant != 0;
        let mut config = PowerIterationConfig::new(o.batch_len);
        config.n_update = o.n_update;
        config.max_updates = o.max_updates;
        config.seed = o.seed;
        config.shift = (o.shift != 0.0).then_some(o.shift);
        config.convergence_tol = if o.tolerance != 0.0 {
            o.tolerance
        } else if ideal {
            IDEAL_PLANT_TOL
        } else {
            TRANSIENT_PLANT_TOL
        };
        let outcome = harness::estimate(model, &config, ideal)?;
        let t = &outcome.trace;
        result.write(RcgEstimateResult {
            estimate: t.estimate,
            reference: outcome.reference,
            shift: t.shift,
            updates: t.updates.len(),
            converged: t.converged as i32,
            peak_bin: outcome.peak_bin,
            final_input_bin: outcome.final_input_bin,
        });
        if t.converged {
            Ok(())
        } else {
            Err(Fail(RcgStatus::NonConvergence, format!("no convergence after {} updates", t.updates.len())))
        }
    })
}
