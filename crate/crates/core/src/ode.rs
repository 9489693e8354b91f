//! Mean-field ODE and its drift field.
//!
//! The drift is written with the `x + y + z` denominator so that it applies
//! off the simplex as well (the scaled stochastic state `counts / N` does not
//! have unit mass). On the simplex it reduces to the classical forced SIR
//! system.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FractionState, ModelParams, PopulationState};
use crate::sim::Trajectory;

pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DriftVector {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl DriftVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.f1, self.f2, self.f3]
    }

    pub fn sum(&self) -> f64 {
        self.f1 + self.f2 + self.f3
    }
}

/// `x y / (x + y + z)`, zero on the empty state.
#[inline]
pub(crate) fn contact_term(state: &FractionState) -> f64 {
    let mass = state.mass();
    if mass > 0.0 {
        state.x * state.y / mass
    } else {
        0.0
    }
}

pub fn drift(params: &ModelParams, state: &FractionState, t: f64) -> DriftVector {
    let FractionState { x: _, y, z } = *state;
    let infection = params.beta_at(t) * contact_term(state);
    DriftVector {
        f1: params.nu * (y + z) - infection,
        f2: infection - (params.nu + params.gamma) * y,
        f3: params.gamma * y - params.nu * z,
    }
}

/// Fixed-step RK4 solution on the grid `t_k = k h` (last step shortened if
/// `t_end` is not a multiple of `h`).
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    times: Vec<f64>,
    states: Vec<FractionState>,
    step: f64,
    params: ModelParams,
}

impl OdeSolution {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[FractionState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("solution has at least the initial point")
    }

    pub fn final_state(&self) -> FractionState {
        *self.states.last().expect("solution has at least the initial point")
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, FractionState)> + '_ {
        self.times.iter().copied().zip(self.states.iter().copied())
    }

    /// Index of the grid point at `t`, if `t` is a grid time to within `1e-9 h`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if t < 0.0 || t > self.t_end() + 1e-9 * self.step {
            return None;
        }
        let k = (t / self.step).round() as usize;
        let k = k.min(self.times.len() - 1);
        ((self.times[k] - t).abs() <= 1e-9 * self.step).then_some(k)
    }

    /// Linear interpolation between stored grid points.
    pub fn at(&self, t: f64) -> Result<FractionState> {
        let horizon = self.t_end();
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::OutOfRange { t, horizon });
        }
        let k = ((t / self.step).floor() as usize).min(self.times.len() - 2);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let a = self.states[k].as_array();
        let b = self.states[k + 1].as_array();
        Ok(FractionState::new(
            a[0] + w * (b[0] - a[0]),
            a[1] + w * (b[1] - a[1]),
            a[2] + w * (b[2] - a[2]),
        ))
    }
}

fn rk4_step(params: &ModelParams, y: [f64; 3], t: f64, h: f64) -> [f64; 3] {
    let f = |s: [f64; 3], tt: f64| drift(params, &FractionState::from_array(s), tt).as_array();
    let add = |a: [f64; 3], k: [f64; 3], c: f64| [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2]];
    let k1 = f(y, t);
    let k2 = f(add(y, k1, h / 2.0), t + h / 2.0);
    let k3 = f(add(y, k2, h / 2.0), t + h / 2.0);
    let k4 = f(add(y, k3, h), t + h);
    let mut out = y;
    for c in 0..3 {
        out[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    out
}

pub fn integrate(
    params: &ModelParams,
    initial: FractionState,
    t_end: f64,
    h: f64,
) -> Result<OdeSolution> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", format!("must be positive, got {h}")));
    }
    if !(t_end >= h && t_end.is_finite()) {
        return Err(Error::invalid("t_end", format!("must be >= h = {h}, got {t_end}")));
    }
    if initial.as_array().iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("initial", format!("must be nonnegative, got {initial:?}")));
    }

    let n_steps = (t_end / h - 1e-9).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(initial);

    let mut y = initial.as_array();
    for k in 0..n_steps {
        let t = k as f64 * h;
        let t_next = if k + 1 == n_steps { t_end } else { (k + 1) as f64 * h };
        y = rk4_step(params, y, t, t_next - t);
        if let Some((component, &value)) = y.iter().enumerate().find(|(_, v)| **v < -1e-9 || !v.is_finite()) {
            return Err(Error::StepTooLarge {
                h,
                t: t_next,
                component,
                value,
            });
        }
        times.push(t_next);
        states.push(FractionState::from_array(y));
    }

    Ok(OdeSolution {
        times,
        states,
        step: h,
        params: *params,
    })
}

/// Running value of `∫ F(counts_s / N, s) ds` along a piecewise-constant path.
///
/// Each constant stretch is integrated in closed form: the transmission term
/// through the antiderivative of β, everything else linearly in time.
#[derive(Debug, Clone)]
pub struct DriftAccumulator {
    params: ModelParams,
    t: f64,
    beta_integral: f64,
    total: [f64; 3],
}

impl DriftAccumulator {
    pub fn new(params: &ModelParams, t0: f64) -> Self {
        DriftAccumulator {
            params: *params,
            t: t0,
            beta_integral: params.beta_antiderivative(t0),
            total: [0.0; 3],
        }
    }

    /// Integrate over `[self.t, t]` with the path held at `state`.
    #[inline]
    pub fn advance(&mut self, state: &PopulationState, t: f64) {
        let b = self.params.beta_antiderivative(t);
        let dt = t - self.t;
        let db = b - self.beta_integral;
        let xi = state.scaled(self.params.n_scale);
        let contact = contact_term(&xi);
        let (nu, gamma) = (self.params.nu, self.params.gamma);
        self.total[0] += nu * (xi.y + xi.z) * dt - contact * db;
        self.total[1] += contact * db - (nu + gamma) * xi.y * dt;
        self.total[2] += (gamma * xi.y - nu * xi.z) * dt;
        self.t = t;
        self.beta_integral = b;
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn value(&self) -> [f64; 3] {
        self.total
    }
}

/// Exact drift integral over the whole horizon of `traj`.
pub fn drift_integral_along_path(params: &ModelParams, traj: &Trajectory) -> Result<[f64; 3]> {
    drift_integral_until(params, traj, traj.t_end)
}

/// Exact drift integral over `[0, t]` for a trajectory carrying its event log.
pub fn drift_integral_until(params: &ModelParams, traj: &Trajectory, t: f64) -> Result<[f64; 3]> {
    let events = traj.events.as_ref().ok_or(Error::MissingEventLog)?;
    if !(0.0..=traj.t_end).contains(&t) {
        return Err(Error::OutOfRange {
            t,
            horizon: traj.t_end,
        });
    }
    let mut acc = DriftAccumulator::new(params, 0.0);
    let mut state = traj.initial;
    for ev in events.iter().take_while(|ev| ev.t <= t) {
        acc.advance(&state, ev.t);
        state = crate::model::apply_event(state, ev.kind)?;
    }
    acc.advance(&state, t);
    Ok(acc.value())
}
