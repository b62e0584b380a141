//! C ABI over `cascade_fpe`.
//!
//! Profiles and initial conditions cross the boundary as opaque handles that
//! the caller releases with the matching `*_free` function. Every fallible call
//! returns a [`CfpeStatus`]; on failure a description is kept per thread and can
//! be read with [`cfpe_last_error`]. Output arrays are caller-allocated.
//!
//! Panics never unwind into C: they are caught and reported as
//! `CFPE_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cascade_fpe::analysis;
use cascade_fpe::montecarlo;
use cascade_fpe::propagator;
use cascade_fpe::{CoefficientProfile, Error, InitialCondition, QuadratureConfig, YGrid};

/// Bumped on any incompatible change to the exported signatures.
pub const CFPE_ABI_VERSION: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfpeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Unsupported = 4,
    DegenerateMeasure = 5,
    Range = 6,
    MassAudit = 7,
    Contract = 8,
    Panic = 9,
}

/// Integrated coefficients at one scale.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CfpeIntegrated {
    pub beta0: f64,
    pub beta1: f64,
    pub gamma: f64,
    pub lambda: f64,
}

/// Opaque coefficient profile.
pub struct CfpeProfile(CoefficientProfile);

/// Opaque initial condition.
pub struct CfpeInitial(InitialCondition);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> CfpeStatus {
    match err {
        Error::ScaleOutOfRange { .. } | Error::Domain(_) => CfpeStatus::Domain,
        Error::Invalid(_) => CfpeStatus::InvalidArgument,
        Error::Unsupported(_) => CfpeStatus::Unsupported,
        Error::DegenerateMeasure(_) => CfpeStatus::DegenerateMeasure,
        Error::Range(_) => CfpeStatus::Range,
        Error::MassAudit(_) => CfpeStatus::MassAudit,
        Error::Contract(_) => CfpeStatus::Contract,
    }
}

enum Failure {
    Null(&'static str),
    Arg(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard<F>(f: F) -> CfpeStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfpeStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer passed for {what}"));
            CfpeStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_last_error(msg);
            CfpeStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            CfpeStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn read_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::Arg(format!("{what} is not valid UTF-8: {e}")))
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(
    p: *mut T,
    len: usize,
    what: &'static str,
) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn quad(gh_order: usize) -> Result<QuadratureConfig, Failure> {
    Ok(QuadratureConfig::new(gh_order, false)?)
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    let slot = out_ref(out, "out")?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

#[no_mangle]
pub extern "C" fn cfpe_abi_version() -> u32 {
    CFPE_ABI_VERSION
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn cfpe_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Constant rates `a`, `c` on `[0, lambda_max]`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn cfpe_profile_constant(
    a: f64,
    c: f64,
    lambda_max: f64,
    out: *mut *mut CfpeProfile,
) -> CfpeStatus {
    guard(|| {
        emit(
            out,
            CfpeProfile(CoefficientProfile::constant(a, c, lambda_max)?),
        )
    })
}

/// Profile from its JSON form, e.g.
/// `{"a": {"kind": "polynomial", "coefficients": [1, 1]}, "c": {...}, "lambda_max": 2}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cfpe_profile_from_json(
    json: *const c_char,
    out: *mut *mut CfpeProfile,
) -> CfpeStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let profile: CoefficientProfile =
            serde_json::from_str(text).map_err(|e| Failure::Arg(format!("profile JSON: {e}")))?;
        emit(out, CfpeProfile(profile))
    })
}

/// # Safety
/// `profile` must come from a `cfpe_profile_*` constructor and not be used
/// afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cfpe_profile_free(profile: *mut CfpeProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// # Safety
/// `profile` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cfpe_profile_integrate(
    profile: *const CfpeProfile,
    lambda: f64,
    out: *mut CfpeIntegrated,
) -> CfpeStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let ints = p.0.integrate(lambda)?;
        *out_ref(out, "out")? = CfpeIntegrated {
            beta0: ints.beta0,
            beta1: ints.beta1,
            gamma: ints.gamma,
            lambda: ints.lambda,
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cfpe_initial_dirac(v0: f64, out: *mut *mut CfpeInitial) -> CfpeStatus {
    guard(|| emit(out, CfpeInitial(InitialCondition::dirac(v0)?)))
}

/// # Safety
/// `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cfpe_initial_lognormal(
    mu: f64,
    sigma2: f64,
    out: *mut *mut CfpeInitial,
) -> CfpeStatus {
    guard(|| emit(out, CfpeInitial(InitialCondition::lognormal(mu, sigma2)?)))
}

/// Samples of `phi(e^y)` on `n` uniform nodes spanning `[y_min, y_max]`. When
/// `probability` is set the samples must integrate to one against `dv`.
///
/// # Safety
/// `samples` must point to `n` readable doubles; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cfpe_initial_grid(
    y_min: f64,
    y_max: f64,
    samples: *const f64,
    n: usize,
    probability: bool,
    out: *mut *mut CfpeInitial,
) -> CfpeStatus {
    guard(|| {
        let s = slice_in(samples, n, "samples")?.to_vec();
        let grid = YGrid::new(y_min, y_max, n)?;
        let ic = if probability {
            InitialCondition::grid_density(grid, s)?
        } else {
            InitialCondition::grid_function(grid, s)?
        };
        emit(out, CfpeInitial(ic))
    })
}

/// Initial condition from its JSON form (`{"kind": "lognormal", ...}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cfpe_initial_from_json(
    json: *const c_char,
    out: *mut *mut CfpeInitial,
) -> CfpeStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let ic: InitialCondition = serde_json::from_str(text)
            .map_err(|e| Failure::Arg(format!("initial condition JSON: {e}")))?;
        emit(out, CfpeInitial(ic))
    })
}

/// # Safety
/// As [`cfpe_profile_free`].
#[no_mangle]
pub unsafe extern "C" fn cfpe_initial_free(ic: *mut CfpeInitial) {
    if !ic.is_null() {
        drop(Box::from_raw(ic));
    }
}

/// `P(lambda, e^y)` for non-atomic data, Gauss-Hermite order `gh_order`.
///
/// # Safety
/// Handles must be live; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cfpe_solve_at(
    profile: *const CfpeProfile,
    ic: *const CfpeInitial,
    lambda: f64,
    y: f64,
    gh_order: usize,
    out: *mut f64,
) -> CfpeStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let i = deref(ic, "ic")?;
        *out_ref(out, "out")? = propagator::solve_at(&p.0, &i.0, lambda, y, &quad(gh_order)?)?;
        Ok(())
    })
}

/// Closed-form solution for an atom at `v0`.
///
/// # Safety
/// `profile` must be live; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cfpe_solve_delta(
    profile: *const CfpeProfile,
    v0: f64,
    lambda: f64,
    y: f64,
    out: *mut f64,
) -> CfpeStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        *out_ref(out, "out")? = propagator::solve_delta(&p.0, v0, lambda, y)?;
        Ok(())
    })
}

/// The solution on `n_points` uniform nodes of `[y_min, y_max]`, written to
/// `values`.
///
/// # Safety
/// Handles must be live; `values` must hold `n_points` doubles.
#[no_mangle]
pub unsafe extern "C" fn cfpe_solve_grid(
    profile: *const CfpeProfile,
    ic: *const CfpeInitial,
    lambda: f64,
    y_min: f64,
    y_max: f64,
    n_points: usize,
    gh_order: usize,
    values: *mut f64,
) -> CfpeStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let i = deref(ic, "ic")?;
        let dst = slice_out(values, n_points, "values")?;
        let grid = YGrid::new(y_min, y_max, n_points)?;
        let field = propagator::solve_grid(&p.0, &i.0, lambda, &grid, &quad(gh_order)?)?;
        dst.copy_from_slice(&field.values);
        Ok(())
    })
}

/// `n` exact terminal samples from an atom at `v0`. Output depends only on
/// the arguments, not on the thread count.
///
/// # Safety
/// `profile` must be live; `samples` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn cfpe_sample_exact(
    profile: *const CfpeProfile,
    v0: f64,
    lambda: f64,
    n: usize,
    seed: u64,
    samples: *mut f64,
) -> CfpeStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let dst = slice_out(samples, n, "samples")?;
        let ens = montecarlo::sample_exact(&p.0, v0, lambda, n, seed)?;
        dst.copy_from_slice(&ens.samples);
        Ok(())
    })
}

/// `<v^n>` at `lambda`; closed form for atoms, quadrature otherwise.
///
/// # Safety
/// Handles must be live; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cfpe_moment(
    profile: *const CfpeProfile,
    ic: *const CfpeInitial,
    n: u32,
    lambda: f64,
    gh_order: usize,
    out: *mut f64,
) -> CfpeStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let i = deref(ic, "ic")?;
        *out_ref(out, "out")? = analysis::moment(&p.0, &i.0, n, lambda, &quad(gh_order)?)?;
        Ok(())
    })
}

/// `zeta_n = n (a + c) - n^2 c` for each of `count` orders.
///
/// # Safety
/// `orders` must hold `count` values and `out` room for `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn cfpe_scaling_exponents(
    a: f64,
    c: f64,
    orders: *const u32,
    count: usize,
    out: *mut f64,
) -> CfpeStatus {
    guard(|| {
        let ns = slice_in(orders, count, "orders")?;
        let dst = slice_out(out, count, "out")?;
        dst.copy_from_slice(&analysis::scaling_exponents(a, c, ns)?);
        Ok(())
    })
}
