//! C ABI for epiflux.
//!
//! Conventions shared by every function:
//!
//! * Fallible calls return an [`EpifluxStatus`]; `EPIFLUX_STATUS_OK` is zero.
//!   After a failure, [`epiflux_last_error`] gives a message for the calling
//!   thread. The message stays valid until the next failing call on that thread.
//! * Models, trajectories, ODE solutions and covariance tables are opaque
//!   handles. Each constructor has a matching `*_free`, and freeing NULL is a no-op.
//! * Array getters take a buffer, its capacity in elements, and an output
//!   length. With NULL buffers only the length is reported. A capacity
//!   smaller than the length gives `EPIFLUX_STATUS_BUFFER_TOO_SMALL`, and
//!   the length is still reported.
//! * 3-vectors are `double[3]` / `uint64_t[3]` in (S, I, R) order; 3×3
//!   matrices are `double[9]` in row-major order.
//! * Panics never cross the boundary; they surface as `EPIFLUX_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use epiflux::cli::{execute, prepare_config, Failure, Overrides, StudyKind};
use epiflux::fluctuation::{cov_matrix, limit_char_function, limit_covariance, w_of_trajectory, LimitCovariance};
use epiflux::ode::{drift, integrate, OdeSolution};
use epiflux::{
    simulate, simulate_coupled, Error, FractionState, ModelParams, PopulationState, RecordMode, SimConfig, Trajectory,
    Truncation,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpifluxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Underflow = 3,
    BudgetExceeded = 4,
    OutOfRange = 5,
    MissingEventLog = 6,
    StepTooLarge = 7,
    GridMismatch = 8,
    DegenerateSample = 9,
    InsufficientData = 10,
    Config = 11,
    Io = 12,
    GateFailed = 13,
    InvalidUtf8 = 14,
    BufferTooSmall = 15,
    Panic = 99,
}

/// What a simulation keeps besides the endpoint.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpifluxRecordMode {
    /// Every event; needed for event access, W at arbitrary times and stop-time replay.
    FullEventLog = 0,
    /// States on the grid `0, dt, 2 dt, ...`.
    SampledGrid = 1,
    /// Final state and drift integral only.
    EndpointOnly = 2,
}

/// Model parameters and population scale.
pub struct EpifluxParams(ModelParams);

/// One simulated sample path.
pub struct EpifluxTrajectory(Trajectory);

/// A mean-field ODE solution on a fixed step grid.
pub struct EpifluxOde(OdeSolution);

/// Tabulated limit covariance `Σ(t)`.
pub struct EpifluxLimitCov(LimitCovariance);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Fail {
    Null(&'static str),
    Lib(Error),
    Utf8(&'static str),
    Buffer { needed: usize, capacity: usize },
    Study(Failure),
    Unknown(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn status_of(e: &Error) -> EpifluxStatus {
    match e.kind() {
        "invalid_parameter" => EpifluxStatus::InvalidParameter,
        "underflow" => EpifluxStatus::Underflow,
        "budget_exceeded" => EpifluxStatus::BudgetExceeded,
        "out_of_range" => EpifluxStatus::OutOfRange,
        "missing_event_log" => EpifluxStatus::MissingEventLog,
        "step_too_large" => EpifluxStatus::StepTooLarge,
        "grid_mismatch" => EpifluxStatus::GridMismatch,
        "degenerate_sample" => EpifluxStatus::DegenerateSample,
        "insufficient_data" => EpifluxStatus::InsufficientData,
        "config" => EpifluxStatus::Config,
        "io" => EpifluxStatus::Io,
        _ => EpifluxStatus::Panic,
    }
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> EpifluxStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f));
    let (status, msg) = match outcome {
        Ok(Ok(())) => return EpifluxStatus::Ok,
        Ok(Err(Fail::Null(what))) => (EpifluxStatus::NullPointer, format!("null pointer: {what}")),
        Ok(Err(Fail::Lib(e))) => (status_of(&e), e.to_string()),
        Ok(Err(Fail::Utf8(what))) => (EpifluxStatus::InvalidUtf8, format!("{what} is not valid UTF-8")),
        Ok(Err(Fail::Buffer { needed, capacity })) => (
            EpifluxStatus::BufferTooSmall,
            format!("buffer holds {capacity} elements, {needed} needed"),
        ),
        Ok(Err(Fail::Study(f))) => match f {
            Failure::Config(e) | Failure::Runtime(e) => (status_of(&e), e.to_string()),
            Failure::Gate(_) => (EpifluxStatus::GateFailed, f.record().to_string()),
        },
        Ok(Err(Fail::Unknown(msg))) => (EpifluxStatus::InvalidParameter, msg),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (EpifluxStatus::Panic, format!("panic: {msg}"))
        }
    };
    set_error(msg);
    status
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn read3<T: Copy>(p: *const T, what: &'static str) -> Result<[T; 3], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok([*p, *p.add(1), *p.add(2)])
}

unsafe fn write_n(p: *mut f64, values: &[f64], what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), p, values.len());
    Ok(())
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8(what))
}

/// Report `len` and decide whether the caller's buffers should be filled.
unsafe fn sized(len: usize, capacity: usize, len_out: *mut usize, has_buffer: bool) -> Result<bool, Fail> {
    *out(len_out, "len_out")? = len;
    if !has_buffer {
        return Ok(false);
    }
    if capacity < len {
        return Err(Fail::Buffer { needed: len, capacity });
    }
    Ok(true)
}

fn matrix9(m: &epiflux::fluctuation::CovMatrix) -> [f64; 9] {
    let mut flat = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            flat[3 * i + j] = m.get(i, j);
        }
    }
    flat
}

/// Message of the last failed call on this thread (empty if none).
#[no_mangle]
pub extern "C" fn epiflux_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn epiflux_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------- parameters

#[no_mangle]
pub unsafe extern "C" fn epiflux_params_new(
    nu: f64,
    gamma: f64,
    beta0: f64,
    beta1: f64,
    n_scale: u64,
    params_out: *mut *mut EpifluxParams,
) -> EpifluxStatus {
    guard(|| {
        let slot = out(params_out, "params_out")?;
        let p = ModelParams::new(nu, gamma, beta0, beta1, n_scale)?;
        *slot = Box::into_raw(Box::new(EpifluxParams(p)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn epiflux_params_free(params: *mut EpifluxParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Seasonal contact rate β(t); NaN for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn epiflux_beta_at(params: *const EpifluxParams, t: f64) -> f64 {
    params.as_ref().map_or(f64::NAN, |p| p.0.beta_at(t))
}

/// Mean-field drift at a fractional state.
#[no_mangle]
pub unsafe extern "C" fn epiflux_drift(
    params: *const EpifluxParams,
    state: *const f64,
    t: f64,
    drift_out: *mut f64,
) -> EpifluxStatus {
    guard(|| {
        let p = get(params, "params")?;
        let s = FractionState::from_array(read3(state, "state")?);
        write_n(drift_out, &drift(&p.0, &s, t).as_array(), "drift_out")
    })
}

/// Infinitesimal covariance matrix at a fractional state.
#[no_mangle]
pub unsafe extern "C" fn epiflux_cov_matrix(
    params: *const EpifluxParams,
    state: *const f64,
    t: f64,
    matrix_out: *mut f64,
) -> EpifluxStatus {
    guard(|| {
        let p = get(params, "params")?;
        let s = FractionState::from_array(read3(state, "state")?);
        write_n(matrix_out, &matrix9(&cov_matrix(&p.0, &s, t)), "matrix_out")
    })
}

// ---------------------------------------------------------------- simulation

fn record_mode(mode: EpifluxRecordMode, dt: f64) -> RecordMode {
    match mode {
        EpifluxRecordMode::FullEventLog => RecordMode::FullEventLog,
        EpifluxRecordMode::SampledGrid => RecordMode::SampledGrid(dt),
        EpifluxRecordMode::EndpointOnly => RecordMode::EndpointOnly,
    }
}

/// Simulate one exact path of the original process.
///
/// `dt` is only read for `EPIFLUX_RECORD_MODE_SAMPLED_GRID`. `epsilon <= 0`
/// disables tracking of the ε-exit time.
#[no_mangle]
pub unsafe extern "C" fn epiflux_simulate(
    params: *const EpifluxParams,
    initial: *const u64,
    t_end: f64,
    seed: u64,
    stream: u64,
    mode: EpifluxRecordMode,
    dt: f64,
    epsilon: f64,
    trajectory_out: *mut *mut EpifluxTrajectory,
) -> EpifluxStatus {
    guard(|| {
        let p = get(params, "params")?;
        let [s, i, r] = read3(initial, "initial")?;
        let slot = out(trajectory_out, "trajectory_out")?;
        let mut cfg = SimConfig::new(p.0, t_end, seed)
            .with_stream(stream)
            .with_record_mode(record_mode(mode, dt));
        if epsilon > 0.0 {
            cfg = cfg.with_epsilon(epsilon);
        }
        let traj = simulate(&cfg, PopulationState::new(s, i, r))?;
        *slot = Box::into_raw(Box::new(EpifluxTrajectory(traj)));
        Ok(())
    })
}

/// Simulate the original and truncated processes from shared randomness.
/// Both keep full event logs.
#[no_mangle]
pub unsafe extern "C" fn epiflux_simulate_coupled(
    params: *const EpifluxParams,
    initial: *const u64,
    t_end: f64,
    seed: u64,
    stream: u64,
    original_out: *mut *mut EpifluxTrajectory,
    truncated_out: *mut *mut EpifluxTrajectory,
) -> EpifluxStatus {
    guard(|| {
        let p = get(params, "params")?;
        let [s, i, r] = read3(initial, "initial")?;
        let a = out(original_out, "original_out")?;
        let b = out(truncated_out, "truncated_out")?;
        let cfg = SimConfig::new(p.0, t_end, seed)
            .with_stream(stream)
            .with_truncation(Truncation::Coupled);
        let (orig, trunc) = simulate_coupled(&cfg, PopulationState::new(s, i, r))?;
        *a = Box::into_raw(Box::new(EpifluxTrajectory(orig)));
        *b = Box::into_raw(Box::new(EpifluxTrajectory(trunc)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn epiflux_trajectory_free(trajectory: *mut EpifluxTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

#[no_mangle]
pub unsafe extern "C" fn epiflux_trajectory_final_state(
    trajectory: *const EpifluxTrajectory,
    state_out: *mut u64,
) -> EpifluxStatus {
    guard(|| {
        let t = get(trajectory, "trajectory")?;
        let s = t.0.final_state;
        if state_out.is_null() {
            return Err(Fail::Null("state_out"));
        }
        std::ptr::copy_nonoverlapping([s.s, s.i, s.r].as_ptr(), state_out, 3);
        Ok(())
    })
}

/// Number of accepted events; 0 for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn epiflux_trajectory_event_count(trajectory: *const EpifluxTrajectory) -> u64 {
    trajectory.as_ref().map_or(0, |t| t.0.event_count)
}

/// `∫₀^t_end F(ξ_s, s) ds` along the path.
#[no_mangle]
pub unsafe extern "C" fn epiflux_trajectory_drift_integral(
    trajectory: *const EpifluxTrajectory,
    drift_out: *mut f64,
) -> EpifluxStatus {
    guard(|| {
        let t = get(trajectory, "trajectory")?;
        write_n(drift_out, &t.0.drift_integral, "drift_out")
    })
}

/// Event times and kinds (kind codes 0..=5: birth, susceptible death,
/// infection, recovery, infectious death, recovered death).
#[no_mangle]
pub unsafe extern "C" fn epiflux_trajectory_events(
    trajectory: *const EpifluxTrajectory,
    times: *mut f64,
    kinds: *mut u8,
    capacity: usize,
    len_out: *mut usize,
) -> EpifluxStatus {
    guard(|| {
        let t = get(trajectory, "trajectory")?;
        let events = t.0.events.as_ref().ok_or(Error::MissingEventLog)?;
        if sized(events.len(), capacity, len_out, !times.is_null() && !kinds.is_null())? {
            for (k, ev) in events.iter().enumerate() {
                *times.add(k) = ev.t;
                *kinds.add(k) = ev.kind as u8;
            }
        }
        Ok(())
    })
}

/// Grid times and states (`3 * len` counts, row per time).
#[no_mangle]
pub unsafe extern "C" fn epiflux_trajectory_grid(
    trajectory: *const EpifluxTrajectory,
    times: *mut f64,
    states: *mut u64,
    capacity: usize,
    len_out: *mut usize,
) -> EpifluxStatus {
    guard(|| {
        let t = get(trajectory, "trajectory")?;
        let grid = t
            .0
            .grid
            .as_ref()
            .ok_or_else(|| Error::GridMismatch("trajectory was not recorded on a grid".into()))?;
        if sized(grid.len(), capacity, len_out, !times.is_null() && !states.is_null())? {
            for (k, p) in grid.iter().enumerate() {
                *times.add(k) = p.t;
                *states.add(3 * k) = p.state.s;
                *states.add(3 * k + 1) = p.state.i;
                *states.add(3 * k + 2) = p.state.r;
            }
        }
        Ok(())
    })
}

/// First times the total exceeds `2N` and leaves the ε band; NaN when not reached.
#[no_mangle]
pub unsafe extern "C" fn epiflux_trajectory_stop_times(
    trajectory: *const EpifluxTrajectory,
    tau_n_out: *mut f64,
    tau_n_eps_out: *mut f64,
) -> EpifluxStatus {
    guard(|| {
        let t = get(trajectory, "trajectory")?;
        *out(tau_n_out, "tau_n_out")? = t.0.stop_times.tau_n.unwrap_or(f64::NAN);
        *out(tau_n_eps_out, "tau_n_eps_out")? = t.0.stop_times.tau_n_eps.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Scaled fluctuation `W_N(t)`; needs a full event log.
#[no_mangle]
pub unsafe extern "C" fn epiflux_trajectory_w(
    trajectory: *const EpifluxTrajectory,
    params: *const EpifluxParams,
    t: f64,
    w_out: *mut f64,
) -> EpifluxStatus {
    guard(|| {
        let traj = get(trajectory, "trajectory")?;
        let p = get(params, "params")?;
        let w = w_of_trajectory(&traj.0, &p.0, &[t])?;
        write_n(w_out, &w[0].w, "w_out")
    })
}

// ------------------------------------------------------------- mean field

#[no_mangle]
pub unsafe extern "C" fn epiflux_ode_integrate(
    params: *const EpifluxParams,
    initial: *const f64,
    t_end: f64,
    h: f64,
    ode_out: *mut *mut EpifluxOde,
) -> EpifluxStatus {
    guard(|| {
        let p = get(params, "params")?;
        let start = FractionState::from_array(read3(initial, "initial")?);
        let slot = out(ode_out, "ode_out")?;
        let sol = integrate(&p.0, start, t_end, h)?;
        *slot = Box::into_raw(Box::new(EpifluxOde(sol)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn epiflux_ode_free(ode: *mut EpifluxOde) {
    if !ode.is_null() {
        drop(Box::from_raw(ode));
    }
}

/// Solution at `t` (linear between grid points).
#[no_mangle]
pub unsafe extern "C" fn epiflux_ode_at(ode: *const EpifluxOde, t: f64, state_out: *mut f64) -> EpifluxStatus {
    guard(|| {
        let o = get(ode, "ode")?;
        write_n(state_out, &o.0.at(t)?.as_array(), "state_out")
    })
}

/// Grid times and states (`3 * len` values, row per time).
#[no_mangle]
pub unsafe extern "C" fn epiflux_ode_values(
    ode: *const EpifluxOde,
    times: *mut f64,
    states: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> EpifluxStatus {
    guard(|| {
        let o = get(ode, "ode")?;
        if sized(o.0.len(), capacity, len_out, !times.is_null() && !states.is_null())? {
            for (k, (t, s)) in o.0.iter().enumerate() {
                *times.add(k) = t;
                for c in 0..3 {
                    *states.add(3 * k + c) = s.as_array()[c];
                }
            }
        }
        Ok(())
    })
}

// ------------------------------------------------------ limit covariance

#[no_mangle]
pub unsafe extern "C" fn epiflux_limit_covariance(
    params: *const EpifluxParams,
    ode: *const EpifluxOde,
    t_end: f64,
    cov_out: *mut *mut EpifluxLimitCov,
) -> EpifluxStatus {
    guard(|| {
        let p = get(params, "params")?;
        let o = get(ode, "ode")?;
        let slot = out(cov_out, "cov_out")?;
        let sigma = limit_covariance(&p.0, &o.0, t_end)?;
        *slot = Box::into_raw(Box::new(EpifluxLimitCov(sigma)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn epiflux_limit_cov_free(cov: *mut EpifluxLimitCov) {
    if !cov.is_null() {
        drop(Box::from_raw(cov));
    }
}

/// `Σ(t)` as a row-major 3×3 matrix.
#[no_mangle]
pub unsafe extern "C" fn epiflux_limit_cov_at(
    cov: *const EpifluxLimitCov,
    t: f64,
    matrix_out: *mut f64,
) -> EpifluxStatus {
    guard(|| {
        let c = get(cov, "cov")?;
        write_n(matrix_out, &matrix9(&c.0.at(t)?), "matrix_out")
    })
}

/// Limit characteristic function `exp(-θᵀΣ(t)θ / 2)`.
#[no_mangle]
pub unsafe extern "C" fn epiflux_limit_char_function(
    cov: *const EpifluxLimitCov,
    t: f64,
    theta: *const f64,
    value_out: *mut f64,
) -> EpifluxStatus {
    guard(|| {
        let c = get(cov, "cov")?;
        let th = read3(theta, "theta")?;
        let slot = out(value_out, "value_out")?;
        *slot = limit_char_function(&c.0, t, &th)?;
        Ok(())
    })
}

// ------------------------------------------------------------------ studies

/// Run a study from JSON config text, exactly as the `epiflux` binary would.
///
/// `study` is one of `simulate`, `ode`, `ensemble`, `fluctuation`, `scaling`.
/// `out_dir` may be NULL to use the config's directory. With `gate` set, a
/// failed statistical check returns `EPIFLUX_STATUS_GATE_FAILED` (files are
/// still written).
#[no_mangle]
pub unsafe extern "C" fn epiflux_run_study(
    study: *const c_char,
    config_json: *const c_char,
    out_dir: *const c_char,
    gate: bool,
) -> EpifluxStatus {
    guard(|| {
        let name = string(study, "study")?;
        let kind = StudyKind::from_name(name).ok_or_else(|| Fail::Unknown(format!("unknown study '{name}'")))?;
        let text = string(config_json, "config_json")?;
        let overrides = Overrides {
            seed: None,
            out_dir: if out_dir.is_null() {
                None
            } else {
                Some(PathBuf::from(string(out_dir, "out_dir")?))
            },
        };
        let config = prepare_config(kind, text, &overrides).map_err(Fail::Study)?;
        execute(kind, &config, gate).map_err(Fail::Study)?;
        Ok(())
    })
}
