//! C ABI over `bilinear-spde`.
//!
//! Models and observation sets are opaque handles, created by
//! `bspde_model_builtin`, `bspde_model_from_json`, `bspde_simulate` or
//! `bspde_observations_read` and released with the matching `*_free`. Every fallible
//! call returns a [`BspdeStatus`]; on failure the message is available from
//! [`bspde_last_error`] on the same thread until the next failing call.
//!
//! Strings are NUL-terminated UTF-8. Output pointers are written only on
//! success.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use bilinear_spde::estimators::{
    aitken_estimate, exact_combination, exact_estimate, mle_single, weighted_average, WeightScheme,
};
use bilinear_spde::experiments::{emit_report, run_monte_carlo, Execution, MCConfig};
use bilinear_spde::io::{self as bio, ModelSpec};
use bilinear_spde::model::{check_parabolicity, Certificate, Verdict};
use bilinear_spde::sim::simulate_observations;
use bilinear_spde::{Error, ObservationSet, SpectralModel};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BspdeStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8 or JSON.
    InvalidString = 2,
    /// Bad model, parameter, mode or other input.
    InvalidInput = 3,
    /// File could not be read or written.
    Io = 4,
    /// Numerical failure, e.g. no exact combination among the given modes.
    Numerical = 5,
    /// Internal panic; the library state is still usable.
    Panic = 6,
}

/// Parabolicity check outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BspdeVerdict {
    Satisfied = 0,
    Violated = 1,
    Inconclusive = 2,
}

/// Opaque model handle.
pub struct BspdeModel {
    model: SpectralModel,
}

/// Opaque observation set handle.
pub struct BspdeObservations {
    obs: ObservationSet,
}

struct Failure(BspdeStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            _ if e.is_numerical() => BspdeStatus::Numerical,
            Error::Io { .. } => BspdeStatus::Io,
            _ => BspdeStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BspdeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BspdeStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            BspdeStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(BspdeStatus::NullArgument, format!("{name} is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn string<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            BspdeStatus::InvalidString,
            format!("{name} is not valid UTF-8"),
        )
    })
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn json<T: serde::de::DeserializeOwned>(s: &str, name: &str) -> Result<T, Failure> {
    serde_json::from_str(s).map_err(|e| Failure(BspdeStatus::InvalidString, format!("{name}: {e}")))
}

/// Message of the last failing call on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn bspde_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bspde_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a builtin model. `params_json` is a JSON object of numeric
/// parameters such as `{"J": 10}` and may be null.
///
/// # Safety
/// `name` and a non-null `params_json` must be NUL-terminated strings and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bspde_model_builtin(
    name: *const c_char,
    params_json: *const c_char,
    out_model: *mut *mut BspdeModel,
) -> BspdeStatus {
    guard(|| {
        let name = string(name, "name")?;
        let params: BTreeMap<String, f64> = if params_json.is_null() {
            BTreeMap::new()
        } else {
            json(string(params_json, "params_json")?, "params_json")?
        };
        let out_model = out(out_model, "out_model")?;
        let spec = ModelSpec::Builtin {
            builtin: name.to_string(),
            params,
        };
        let model = spec.build()?;
        *out_model = Box::into_raw(Box::new(BspdeModel { model }));
        Ok(())
    })
}

/// Builds a model from a JSON spec, either `{"builtin": ..}` or `{"custom": ..}`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string and `out_model` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bspde_model_from_json(
    spec_json: *const c_char,
    out_model: *mut *mut BspdeModel,
) -> BspdeStatus {
    guard(|| {
        let spec: ModelSpec = json(string(spec_json, "spec_json")?, "spec_json")?;
        let out_model = out(out_model, "out_model")?;
        let model = spec.build()?;
        *out_model = Box::into_raw(Box::new(BspdeModel { model }));
        Ok(())
    })
}

/// Releases a model. Null is a no-op.
///
/// # Safety
/// `model` must come from a model constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bspde_model_free(model: *mut BspdeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of modes the model defines.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bspde_model_k_max(model: *const BspdeModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.k_max())
}

/// Writes rho_k, nu_k, the total loading M_k and eta_k = M_k / nu_k^2.
///
/// # Safety
/// `model` must be a live handle; the outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bspde_model_mode(
    model: *const BspdeModel,
    k: usize,
    out_rho: *mut f64,
    out_nu: *mut f64,
    out_m: *mut f64,
    out_eta: *mut f64,
) -> BspdeStatus {
    guard(|| {
        let m = &deref(model, "model")?.model;
        let (r, n, mm, e) = (
            out(out_rho, "out_rho")?,
            out(out_nu, "out_nu")?,
            out(out_m, "out_m")?,
            out(out_eta, "out_eta")?,
        );
        let c = m.mode_coefficients(k)?;
        (*r, *n, *mm, *e) = (c.rho_k, c.nu_k, c.m_k, c.eta_k);
        Ok(())
    })
}

/// Simulates terminal observations of `modes` under one shared noise draw.
///
/// # Safety
/// `modes` must point to `n_modes` values; `out_obs` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bspde_simulate(
    model: *const BspdeModel,
    modes: *const usize,
    n_modes: usize,
    theta: f64,
    u0: f64,
    horizon: f64,
    seed: u64,
    out_obs: *mut *mut BspdeObservations,
) -> BspdeStatus {
    guard(|| {
        let m = &deref(model, "model")?.model;
        let modes = slice(modes, n_modes, "modes")?;
        let out_obs = out(out_obs, "out_obs")?;
        let u0: BTreeMap<usize, f64> = modes.iter().map(|&k| (k, u0)).collect();
        let obs = simulate_observations(m, modes, theta, &u0, horizon, seed)?;
        *out_obs = Box::into_raw(Box::new(BspdeObservations { obs }));
        Ok(())
    })
}

/// Reads an observation CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_obs` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bspde_observations_read(
    path: *const c_char,
    out_obs: *mut *mut BspdeObservations,
) -> BspdeStatus {
    guard(|| {
        let path = string(path, "path")?;
        let out_obs = out(out_obs, "out_obs")?;
        let obs = bio::read_observations(Path::new(path))?;
        *out_obs = Box::into_raw(Box::new(BspdeObservations { obs }));
        Ok(())
    })
}

/// Writes an observation CSV.
///
/// # Safety
/// `obs` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bspde_observations_write(
    obs: *const BspdeObservations,
    path: *const c_char,
) -> BspdeStatus {
    guard(|| {
        let obs = &deref(obs, "obs")?.obs;
        let path = string(path, "path")?;
        bio::write_observations(Path::new(path), obs)?;
        Ok(())
    })
}

/// Releases an observation set. Null is a no-op.
///
/// # Safety
/// `obs` must come from an observation constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bspde_observations_free(obs: *mut BspdeObservations) {
    if !obs.is_null() {
        drop(Box::from_raw(obs));
    }
}

/// Number of observed modes.
///
/// # Safety
/// `obs` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bspde_observations_len(obs: *const BspdeObservations) -> usize {
    obs.as_ref().map_or(0, |o| o.obs.modes.len())
}

/// Log-ratio ln(u_k(T)/u_k(0)) of an observed mode.
///
/// # Safety
/// `obs` must be a live handle and `out_v` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bspde_observations_log_ratio(
    obs: *const BspdeObservations,
    k: usize,
    out_v: *mut f64,
) -> BspdeStatus {
    guard(|| {
        let obs = &deref(obs, "obs")?.obs;
        let v = out(out_v, "out_v")?;
        *v = obs.log_ratio(k)?;
        Ok(())
    })
}

/// Single-mode MLE. `out_mse` receives the theoretical MSE and may be null.
///
/// # Safety
/// Handles must be live; `out_theta` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bspde_estimate_mle(
    model: *const BspdeModel,
    obs: *const BspdeObservations,
    k: usize,
    out_theta: *mut f64,
    out_mse: *mut f64,
) -> BspdeStatus {
    guard(|| {
        let m = &deref(model, "model")?.model;
        let obs = &deref(obs, "obs")?.obs;
        let theta = out(out_theta, "out_theta")?;
        let r = mle_single(m, k, obs)?;
        *theta = r.theta_hat;
        if let (Some(mse), Some(dst)) = (r.theoretical_mse, out_mse.as_mut()) {
            *dst = mse;
        }
        Ok(())
    })
}

/// Weighted average of the MLEs of modes 1..=n. `scheme` is `one`, `k`,
/// `inv_k`, `pow:<p>` or a comma list of explicit weights.
///
/// # Safety
/// Handles must be live, `scheme` NUL-terminated, `out_theta` valid;
/// `out_mse` may be null.
#[no_mangle]
pub unsafe extern "C" fn bspde_estimate_weighted(
    model: *const BspdeModel,
    obs: *const BspdeObservations,
    scheme: *const c_char,
    n: usize,
    out_theta: *mut f64,
    out_mse: *mut f64,
) -> BspdeStatus {
    guard(|| {
        let m = &deref(model, "model")?.model;
        let obs = &deref(obs, "obs")?.obs;
        let scheme = WeightScheme::parse(string(scheme, "scheme")?)?;
        let theta = out(out_theta, "out_theta")?;
        let r = weighted_average(m, obs, &scheme, n)?;
        *theta = r.theta_hat;
        if let (Some(mse), Some(dst)) = (r.theoretical_mse, out_mse.as_mut()) {
            *dst = mse;
        }
        Ok(())
    })
}

/// Aitken-accelerated estimate at mode k from modes k, k+1, k+2.
/// `out_degenerate` receives 1 when the second difference vanished and the
/// raw MLE was passed through; it may be null.
///
/// # Safety
/// Handles must be live and `out_theta` valid.
#[no_mangle]
pub unsafe extern "C" fn bspde_estimate_aitken(
    model: *const BspdeModel,
    obs: *const BspdeObservations,
    k: usize,
    out_theta: *mut f64,
    out_degenerate: *mut i32,
) -> BspdeStatus {
    guard(|| {
        let m = &deref(model, "model")?.model;
        let obs = &deref(obs, "obs")?.obs;
        let theta = out(out_theta, "out_theta")?;
        let r = aitken_estimate(m, k, obs)?;
        *theta = r.theta_hat;
        if let Some(dst) = out_degenerate.as_mut() {
            *dst = i32::from(r.degenerate);
        }
        Ok(())
    })
}

/// Noise-cancelling exact estimate from the given modes.
///
/// # Safety
/// Handles must be live, `modes` must point to `n_modes` values and
/// `out_theta` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bspde_estimate_exact(
    model: *const BspdeModel,
    obs: *const BspdeObservations,
    modes: *const usize,
    n_modes: usize,
    out_theta: *mut f64,
) -> BspdeStatus {
    guard(|| {
        let m = &deref(model, "model")?.model;
        let obs = &deref(obs, "obs")?.obs;
        let modes = slice(modes, n_modes, "modes")?;
        let theta = out(out_theta, "out_theta")?;
        let combo = exact_combination(m, modes)?;
        *theta = exact_estimate(m, &combo, obs)?.theta_hat;
        Ok(())
    })
}

/// Checks the eigenvalue parabolicity conditions for k = 1..=k_range at each
/// theta sample. `out_first_k` receives the smallest violating mode (0 if
/// none) and may be null.
///
/// # Safety
/// `model` must be live, `thetas` must point to `n_thetas` values and
/// `out_verdict` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bspde_check_parabolicity(
    model: *const BspdeModel,
    thetas: *const f64,
    n_thetas: usize,
    delta: f64,
    c1: f64,
    c2: f64,
    k_range: usize,
    require_full_range: bool,
    out_verdict: *mut BspdeVerdict,
    out_first_k: *mut usize,
) -> BspdeStatus {
    guard(|| {
        let m = &deref(model, "model")?.model;
        let thetas = slice(thetas, n_thetas, "thetas")?;
        let verdict = out(out_verdict, "out_verdict")?;
        let report = check_parabolicity(
            m,
            Certificate { delta, c1, c2 },
            thetas,
            k_range,
            require_full_range,
        )?;
        *verdict = match report.verdict {
            Verdict::Satisfied => BspdeVerdict::Satisfied,
            Verdict::Violated => BspdeVerdict::Violated,
            Verdict::Inconclusive => BspdeVerdict::Inconclusive,
        };
        if let Some(dst) = out_first_k.as_mut() {
            *dst = report.first_violation.map_or(0, |v| v.k);
        }
        Ok(())
    })
}

/// Runs a Monte Carlo study described by `config_json` and writes the report
/// CSV to `out_path` with its configuration in `<out_path>.json`.
///
/// # Safety
/// Both strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bspde_run_monte_carlo(
    config_json: *const c_char,
    out_path: *const c_char,
    serial: bool,
) -> BspdeStatus {
    guard(|| {
        let config: MCConfig = json(string(config_json, "config_json")?, "config_json")?;
        let path = string(out_path, "out_path")?;
        let execution = if serial {
            Execution::Serial
        } else {
            Execution::Parallel
        };
        let report = run_monte_carlo(&config, execution)?;
        emit_report(&report, Path::new(path))?;
        Ok(())
    })
}
