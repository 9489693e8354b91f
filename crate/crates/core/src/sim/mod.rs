//! Exact sample paths of the seasonally forced SIR chain.
//!
//! All channels are aggregated into one next-event clock running at the
//! state-dependent envelope rate
//!
//! ```text
//! λ̄ = ν T + ν S + ν I + ν R + γ I + β₀(1+β₁) S I / T
//! ```
//!
//! A channel is picked proportionally to its envelope rate. Only infection
//! depends on time; a proposed infection at time `t` is kept with probability
//! `β(t) / β₀(1+β₁)`. Rejected proposals consume random numbers but leave the
//! state untouched, so the path has exactly the law of the chain.

mod coupled;
mod grid;

pub use coupled::simulate_coupled;
pub use grid::{detect_stop_times, sample_grid};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{apply_event, EventKind, ModelParams, PopulationState};
use crate::ode::DriftAccumulator;
use crate::rng::RngStream;

/// Hard cap on accepted events per realization.
pub const DEFAULT_EVENT_BUDGET: u64 = 10_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", content = "dt", rename_all = "snake_case")]
pub enum RecordMode {
    FullEventLog,
    SampledGrid(f64),
    EndpointOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    Original,
    Truncated,
    Coupled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub t_end: f64,
    pub seed: u64,
    /// Realization index; selects the random stream.
    pub stream: u64,
    pub record_mode: RecordMode,
    pub truncation: Truncation,
    /// Also track the first exit of the total from `[N(1-ε), N(1+ε)]`.
    pub epsilon: Option<f64>,
    pub event_budget: u64,
}

impl SimConfig {
    pub fn new(params: ModelParams, t_end: f64, seed: u64) -> Self {
        SimConfig {
            params,
            t_end,
            seed,
            stream: 0,
            record_mode: RecordMode::FullEventLog,
            truncation: Truncation::Original,
            epsilon: None,
            event_budget: DEFAULT_EVENT_BUDGET,
        }
    }

    pub fn with_record_mode(mut self, mode: RecordMode) -> Self {
        self.record_mode = mode;
        self
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn with_event_budget(mut self, budget: u64) -> Self {
        self.event_budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if let RecordMode::SampledGrid(dt) = self.record_mode {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid("epsilon", format!("must be positive, got {eps}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

/// Path value at a sampling time, with the drift integral up to that time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub t: f64,
    pub state: PopulationState,
    pub drift: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StopTimes {
    /// First time the total exceeds `2N`.
    pub tau_n: Option<f64>,
    /// First time `|T - N| > εN`.
    pub tau_n_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: PopulationState,
    pub n_scale: u64,
    pub t_end: f64,
    /// Present for [`RecordMode::FullEventLog`].
    pub events: Option<Vec<Event>>,
    /// Present for [`RecordMode::SampledGrid`].
    pub grid: Option<Vec<GridPoint>>,
    pub final_state: PopulationState,
    pub event_count: u64,
    pub rejected_proposals: u64,
    /// `∫₀^t_end F(counts_s / N, s) ds`, exact along the path.
    pub drift_integral: [f64; 3],
    pub stop_times: StopTimes,
}

impl Trajectory {
    /// State at `t` (events at exactly `t` included). Needs the event log.
    pub fn state_at(&self, t: f64) -> Result<PopulationState> {
        let events = self.events.as_ref().ok_or(Error::MissingEventLog)?;
        if !(0.0..=self.t_end).contains(&t) {
            return Err(Error::OutOfRange {
                t,
                horizon: self.t_end,
            });
        }
        let mut state = self.initial;
        for ev in events.iter().take_while(|ev| ev.t <= t) {
            state = apply_event(state, ev.kind)?;
        }
        Ok(state)
    }
}

pub(crate) fn grid_len(t_end: f64, dt: f64) -> usize {
    (t_end / dt + 1e-9).floor() as usize + 1
}

/// Bookkeeping shared by every simulation mode: event log, grid sampling,
/// drift integration, stopping times and the event budget.
pub(crate) struct Recorder {
    state: PopulationState,
    initial: PopulationState,
    n_scale: u64,
    t_end: f64,
    events: Option<Vec<Event>>,
    grid: Option<Vec<GridPoint>>,
    grid_dt: f64,
    grid_next: usize,
    grid_len: usize,
    drift: DriftAccumulator,
    event_count: u64,
    rejected: u64,
    budget: u64,
    epsilon: Option<f64>,
    stop: StopTimes,
}

impl Recorder {
    pub(crate) fn new(config: &SimConfig, initial: PopulationState) -> Self {
        let (events, grid, grid_dt, grid_len) = match config.record_mode {
            RecordMode::FullEventLog => (Some(Vec::new()), None, 0.0, 0),
            RecordMode::SampledGrid(dt) => {
                let len = grid_len(config.t_end, dt);
                (None, Some(Vec::with_capacity(len)), dt, len)
            }
            RecordMode::EndpointOnly => (None, None, 0.0, 0),
        };
        let mut rec = Recorder {
            state: initial,
            initial,
            n_scale: config.params.n_scale,
            t_end: config.t_end,
            events,
            grid,
            grid_dt,
            grid_next: 0,
            grid_len,
            drift: DriftAccumulator::new(&config.params, 0.0),
            event_count: 0,
            rejected: 0,
            budget: config.event_budget,
            epsilon: config.epsilon,
            stop: StopTimes::default(),
        };
        rec.check_stop_times(0.0);
        rec
    }

    #[inline]
    pub(crate) fn state(&self) -> PopulationState {
        self.state
    }

    #[inline]
    pub(crate) fn reject(&mut self) {
        self.rejected += 1;
    }

    fn check_stop_times(&mut self, t: f64) {
        let total = self.state.total();
        let n = self.n_scale;
        if self.stop.tau_n.is_none() && total > n.saturating_mul(2) {
            self.stop.tau_n = Some(t);
        }
        if let Some(eps) = self.epsilon {
            if self.stop.tau_n_eps.is_none() && (total as f64 - n as f64).abs() > eps * n as f64 {
                self.stop.tau_n_eps = Some(t);
            }
        }
    }

    /// Emit grid points strictly before `t` (ties with an event go to the
    /// post-event state).
    #[inline]
    fn emit_grid_before(&mut self, t: f64, inclusive: bool) {
        let Some(grid) = self.grid.as_mut() else {
            return;
        };
        while self.grid_next < self.grid_len {
            let g = self.grid_next as f64 * self.grid_dt;
            if g > t || (!inclusive && g == t) {
                break;
            }
            self.drift.advance(&self.state, g);
            grid.push(GridPoint {
                t: g,
                state: self.state,
                drift: self.drift.value(),
            });
            self.grid_next += 1;
        }
    }

    #[inline]
    pub(crate) fn fire(&mut self, t: f64, kind: EventKind) -> Result<()> {
        self.emit_grid_before(t, false);
        self.drift.advance(&self.state, t);
        self.state = apply_event(self.state, kind)?;
        self.event_count += 1;
        if self.event_count > self.budget {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
                t,
            });
        }
        if let Some(events) = self.events.as_mut() {
            events.push(Event { t, kind });
        }
        self.check_stop_times(t);
        Ok(())
    }

    pub(crate) fn finish(mut self) -> Trajectory {
        self.emit_grid_before(self.t_end, true);
        self.drift.advance(&self.state, self.t_end);
        Trajectory {
            initial: self.initial,
            n_scale: self.n_scale,
            t_end: self.t_end,
            events: self.events,
            grid: self.grid,
            final_state: self.state,
            event_count: self.event_count,
            rejected_proposals: self.rejected,
            drift_integral: self.drift.value(),
            stop_times: self.stop,
        }
    }

    /// Overwrite τ_N with a value detected elsewhere (the coupled original).
    pub(crate) fn set_tau_n(&mut self, tau_n: Option<f64>) {
        self.stop.tau_n = tau_n;
    }

    pub(crate) fn tau_n(&self) -> Option<f64> {
        self.stop.tau_n
    }
}

/// Pick the channel whose cumulative rate first exceeds `target`.
#[inline]
pub(crate) fn select_channel(rates: &[f64; 6], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (idx, &rate) in rates.iter().enumerate() {
        if rate > 0.0 {
            acc += rate;
            last_positive = idx;
            if target < acc {
                return idx;
            }
        }
    }
    last_positive
}

/// Envelope rates in [`EventKind::ALL`] order. Infection uses β₀(1+β₁).
#[inline]
fn envelope_rates(params: &ModelParams, state: &PopulationState, truncated: bool) -> [f64; 6] {
    let total = state.total();
    let cap = if truncated { params.cap() } else { u64::MAX };
    let c = |v: u64| v.min(cap) as f64;
    let infection = if total == 0 {
        0.0
    } else {
        params.beta_max() * c(state.s) * state.i as f64 / total as f64
    };
    [
        params.nu * c(total),
        params.nu * c(state.s),
        infection,
        params.gamma * c(state.i),
        params.nu * c(state.i),
        params.nu * c(state.r),
    ]
}

/// Simulate one exact realization of the original or truncated chain.
pub fn simulate(config: &SimConfig, initial: PopulationState) -> Result<Trajectory> {
    config.validate()?;
    if initial.total() == 0 {
        return Err(Error::invalid("initial", "population must be nonempty"));
    }
    let truncated = match config.truncation {
        Truncation::Original => false,
        Truncation::Truncated => true,
        Truncation::Coupled => {
            return Err(Error::invalid(
                "truncation",
                "coupled runs produce two paths; use simulate_coupled",
            ))
        }
    };

    let params = &config.params;
    let mut rng = RngStream::new(config.seed, config.stream);
    let mut rec = Recorder::new(config, initial);
    let mut t = 0.0;

    loop {
        let state = rec.state();
        let rates = envelope_rates(params, &state, truncated);
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            break;
        }
        t += rng.exponential(total);
        if t > config.t_end {
            break;
        }
        let kind = EventKind::ALL[select_channel(&rates, rng.uniform() * total)];
        if kind == EventKind::Infection {
            let ratio = params.thinning_ratio(t);
            debug_assert!(ratio <= 1.0 + 1e-15 && ratio >= (1.0 - params.beta1) / (1.0 + params.beta1) - 1e-15);
            if rng.uniform() >= ratio {
                rec.reject();
                continue;
            }
        }
        rec.fire(t, kind)?;
    }

    Ok(rec.finish())
}
