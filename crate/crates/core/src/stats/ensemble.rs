//! Monte Carlo ensembles over independent realizations.
//!
//! Realization `i` of the group for the `g`-th population size uses stream
//! `g * n_runs + i` of the ensemble seed, so results do not depend on thread
//! count or scheduling. Per-run summaries are collected in run order and all
//! statistics are reduced sequentially afterwards.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluctuation::FluctuationSample;
use crate::model::PopulationState;
use crate::ode::OdeSolution;
use crate::sim::{simulate, GridPoint, RecordMode, SimConfig, StopTimes, Truncation};

use super::moments::{quantile_sorted, Moments};
use super::regression::ScalingPoint;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSpec {
    /// Model, horizon and seed; `params.n_scale` is replaced by each entry of `n_values`.
    pub base: SimConfig,
    pub initial_fractions: [f64; 3],
    pub n_runs: u64,
    pub n_values: Vec<u64>,
    /// Times at which `W_N` is recorded for every run.
    pub observe_times: Vec<f64>,
    /// Keep each run's path on this grid (needed for deviation reports and
    /// for observation times before the horizon).
    pub grid_dt: Option<f64>,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.n_runs < 2 {
            return Err(Error::invalid("runs", format!("need at least 2 runs, got {}", self.n_runs)));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::invalid("n_values", "need at least one positive N"));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_values", "must be strictly increasing"));
        }
        if let Some(dt) = self.grid_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
            }
        }
        for &t in &self.observe_times {
            self.observation_slot(t)?;
        }
        Ok(())
    }

    /// Grid index of an observation time, or `None` for the horizon itself.
    fn observation_slot(&self, t: f64) -> Result<Option<usize>> {
        let t_end = self.base.t_end;
        if !(0.0..=t_end).contains(&t) {
            return Err(Error::OutOfRange { t, horizon: t_end });
        }
        match self.grid_dt {
            Some(dt) => {
                let k = (t / dt).round();
                if (k * dt - t).abs() > 1e-9 * dt {
                    return Err(Error::GridMismatch(format!("observation time {t} is not a multiple of dt = {dt}")));
                }
                Ok(Some(k as usize))
            }
            None if t == t_end => Ok(None),
            None => Err(Error::GridMismatch(format!(
                "observation time {t} before the horizon needs a sampling grid"
            ))),
        }
    }

    fn record_mode(&self) -> RecordMode {
        match self.grid_dt {
            Some(dt) => RecordMode::SampledGrid(dt),
            None => RecordMode::EndpointOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_index: u64,
    pub n_scale: u64,
    pub initial: PopulationState,
    pub final_state: PopulationState,
    /// `W_N` at each observation time, in the order requested.
    pub samples: Vec<FluctuationSample>,
    /// Path state at each observation time.
    pub observed: Vec<PopulationState>,
    pub grid: Option<Vec<GridPoint>>,
    pub event_count: u64,
    pub stop_times: StopTimes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleGroup {
    pub n: u64,
    pub runs: Vec<RunSummary>,
}

impl EnsembleGroup {
    /// `W_N` of every run at the `obs`-th observation time.
    pub fn w_samples(&self, obs: usize) -> Vec<FluctuationSample> {
        self.runs.iter().map(|r| r.samples[obs]).collect()
    }

    /// Mean and spread of the infective component at the `obs`-th observation.
    pub fn scaling_point(&self, obs: usize) -> Result<ScalingPoint> {
        let z = Moments::from_slice(&self.runs.iter().map(|r| r.samples[obs].centred()[1]).collect::<Vec<_>>());
        let f = Moments::from_slice(
            &self
                .runs
                .iter()
                .map(|r| r.observed[obs].fractions().y)
                .collect::<Vec<_>>(),
        );
        ScalingPoint::new(self.n, z.std(), f.mean)
    }
}

fn run_one(spec: &EnsembleSpec, n: u64, stream: u64, run_index: u64) -> Result<RunSummary> {
    let mut config = spec.base.clone();
    config.params.n_scale = n;
    config.stream = stream;
    config.record_mode = spec.record_mode();
    config.truncation = Truncation::Original;
    let initial = PopulationState::from_fractions(n, spec.initial_fractions)?;
    let traj = simulate(&config, initial)?;

    let mut samples = Vec::with_capacity(spec.observe_times.len());
    let mut observed = Vec::with_capacity(spec.observe_times.len());
    for &t in &spec.observe_times {
        let (state, drift) = match spec.observation_slot(t)? {
            Some(k) => {
                let grid = traj.grid.as_ref().expect("grid recorded");
                let p = grid
                    .get(k)
                    .ok_or_else(|| Error::GridMismatch(format!("grid has no point {k}")))?;
                (p.state, p.drift)
            }
            None => (traj.final_state, traj.drift_integral),
        };
        samples.push(FluctuationSample::from_parts(t, &initial, &state, &drift, n));
        observed.push(state);
    }

    Ok(RunSummary {
        run_index,
        n_scale: n,
        initial,
        final_state: traj.final_state,
        samples,
        observed,
        grid: traj.grid,
        event_count: traj.event_count,
        stop_times: traj.stop_times,
    })
}

/// Run `n_runs` realizations for every population size in the spec.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<Vec<EnsembleGroup>> {
    spec.validate()?;
    spec.n_values
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let results: Vec<Result<RunSummary>> = (0..spec.n_runs)
                .into_par_iter()
                .map(|i| run_one(spec, n, g as u64 * spec.n_runs + i, i))
                .collect();
            let runs = results
                .into_iter()
                .enumerate()
                .map(|(i, r)| {
                    r.map_err(|e| Error::RunFailed {
                        run_index: i as u64,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(EnsembleGroup { n, runs })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    /// Per run, `sup_t ‖(S, I, R)/T − (x, y, z)‖∞` over the shared grid.
    pub per_run: Vec<f64>,
    pub mean: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub max: f64,
}

pub fn deviation_report(runs: &[RunSummary], ode: &OdeSolution) -> Result<DeviationReport> {
    if runs.is_empty() {
        return Err(Error::InsufficientData("no runs to report on".into()));
    }
    let per_run = runs
        .iter()
        .map(|run| {
            let grid = run.grid.as_ref().ok_or_else(|| {
                Error::GridMismatch(format!("run {} carries no sampling grid", run.run_index))
            })?;
            grid.iter().try_fold(0.0f64, |sup, p| {
                let k = ode.index_of(p.t).ok_or_else(|| {
                    Error::GridMismatch(format!("time {} is not on the ODE grid (h = {})", p.t, ode.step()))
                })?;
                let frac = p.state.fractions().as_array();
                let det = ode.states()[k].as_array();
                let dev = (0..3).map(|c| (frac[c] - det[c]).abs()).fold(0.0, f64::max);
                Ok(sup.max(dev))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut sorted = per_run.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(DeviationReport {
        mean: Moments::from_slice(&per_run).mean,
        q05: quantile_sorted(&sorted, 0.05),
        median: quantile_sorted(&sorted, 0.5),
        q95: quantile_sorted(&sorted, 0.95),
        max: *sorted.last().expect("nonempty"),
        per_run,
    })
}
