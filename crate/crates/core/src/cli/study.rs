use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::export::{
    write_event_log, write_file, write_file_io, write_grid, write_histogram, write_ode, write_scaling, write_sigma,
    write_w_samples,
};
use crate::fluctuation::{limit_covariance, FluctuationSample};
use crate::model::{FractionState, PopulationState};
use crate::ode::{integrate, OdeSolution};
use crate::sim::{sample_grid, simulate, RecordMode, SimConfig};
use crate::stats::{
    deviation_report, normality_report, run_ensemble, scaling_regression, EnsembleSpec, ScalingPoint,
};

use super::config::{RunConfig, StudyKind};

/// One named pass/fail check on a study's results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyOutput {
    pub kind: StudyKind,
    pub out_dir: PathBuf,
    /// Data files written, relative to `out_dir`, excluding `metadata.json`.
    pub files: Vec<String>,
    pub gates: Vec<GateCheck>,
}

impl StudyOutput {
    pub fn gates_passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

fn base_config(config: &RunConfig, n: u64, t_end: f64, mode: RecordMode) -> Result<SimConfig> {
    let mut sim = SimConfig::new(config.params(n)?, t_end, config.seed)
        .with_record_mode(mode)
        .with_event_budget(config.event_budget);
    sim.epsilon = config.epsilon;
    Ok(sim)
}

fn mean_field(config: &RunConfig, t_end: f64) -> Result<OdeSolution> {
    integrate(
        &config.params(1)?,
        FractionState::from_array(config.initial_fractions()),
        t_end,
        config.h,
    )
}

fn trajectory(config: &RunConfig, w: &mut Writer) -> Result<(Value, Vec<GateCheck>)> {
    let n = config.n;
    let initial = config.initial_state(n)?;
    let mode = if config.event_log {
        RecordMode::FullEventLog
    } else {
        RecordMode::SampledGrid(config.dt)
    };
    let sim = base_config(config, n, config.t_end, mode)?;
    let traj = simulate(&sim, initial)?;
    let grid: Vec<(f64, PopulationState)> = match &traj.grid {
        Some(g) => g.iter().map(|p| (p.t, p.state)).collect(),
        None => sample_grid(&traj, config.dt)?,
    };
    write_file_io(&w.path("grid.csv"), |out| write_grid(out, grid.iter().copied()))?;
    if config.event_log {
        write_file(&w.path("events.csv"), |out| write_event_log(out, &traj))?;
    }

    let ode = mean_field(config, config.t_end)?;
    write_file_io(&w.path("ode.csv"), |out| write_ode(out, &ode, 1))?;
    let mut sup_dev = 0.0f64;
    for (t, state) in &grid {
        let det = ode.at(*t)?.as_array();
        let frac = state.fractions().as_array();
        for c in 0..3 {
            sup_dev = sup_dev.max((frac[c] - det[c]).abs());
        }
    }
    let w_end = FluctuationSample::from_parts(config.t_end, &initial, &traj.final_state, &traj.drift_integral, n);
    let summary = json!({
        "study": "trajectory",
        "n": n,
        "initial_state": initial,
        "final_state": traj.final_state,
        "event_count": traj.event_count,
        "rejected_proposals": traj.rejected_proposals,
        "drift_integral": traj.drift_integral,
        "w_final": w_end.w,
        "stop_times": traj.stop_times,
        "sup_deviation_from_ode": sup_dev,
    });
    Ok((summary, Vec::new()))
}

fn ode_study(config: &RunConfig, w: &mut Writer) -> Result<(Value, Vec<GateCheck>)> {
    let ode = mean_field(config, config.t_end)?;
    write_file_io(&w.path("ode.csv"), |out| write_ode(out, &ode, 1))?;
    let m0 = ode.states()[0].mass();
    let mass_error = ode.states().iter().map(|s| (s.mass() - m0).abs()).fold(0.0, f64::max);
    let summary = json!({
        "study": "ode",
        "points": ode.len(),
        "step": ode.step(),
        "final_state": ode.final_state(),
        "max_mass_error": mass_error,
    });
    Ok((summary, Vec::new()))
}

fn ensemble_study(config: &RunConfig, w: &mut Writer) -> Result<(Value, Vec<GateCheck>)> {
    let n_values = config.resolved_n_values(StudyKind::Ensemble);
    let spec = EnsembleSpec {
        base: base_config(config, n_values[0], config.t_end, RecordMode::SampledGrid(config.dt))?,
        initial_fractions: config.initial_fractions(),
        n_runs: config.runs,
        n_values,
        observe_times: Vec::new(),
        grid_dt: Some(config.dt),
    };
    let groups = run_ensemble(&spec)?;
    let ode = mean_field(config, config.t_end)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for g in &groups {
        let rep = deviation_report(&g.runs, &ode)?;
        for (run, d) in g.runs.iter().zip(&rep.per_run) {
            rows.push((g.n, run.run_index, *d));
        }
        reports.push(json!({
            "n": g.n,
            "mean": rep.mean,
            "q05": rep.q05,
            "median": rep.median,
            "q95": rep.q95,
            "max": rep.max,
        }));
    }
    write_file_io(&w.path("deviations.csv"), |out| {
        use std::io::Write;
        out.write_all(b"n,run_index,sup_deviation\n")?;
        for (n, i, d) in &rows {
            writeln!(out, "{n},{i},{}", crate::export::fmt_f64(*d))?;
        }
        Ok(())
    })?;
    let means: Vec<f64> = reports.iter().map(|r| r["mean"].as_f64().unwrap_or(f64::NAN)).collect();
    let decreasing = means.windows(2).all(|m| m[1] < m[0]);
    let gates = vec![GateCheck {
        name: "mean_deviation_decreasing".into(),
        passed: decreasing,
        detail: format!("mean sup-deviation by N: {means:?}"),
    }];
    let summary = json!({
        "study": "ensemble",
        "runs": config.runs,
        "groups": reports,
        "mean_deviation_decreasing": decreasing,
    });
    Ok((summary, gates))
}

fn fluctuation_study(config: &RunConfig, w: &mut Writer) -> Result<(Value, Vec<GateCheck>)> {
    let n = config.n;
    let t = config.t_obs;
    let spec = EnsembleSpec {
        base: base_config(config, n, t, RecordMode::EndpointOnly)?,
        initial_fractions: config.initial_fractions(),
        n_runs: config.runs,
        n_values: vec![n],
        observe_times: vec![t],
        grid_dt: None,
    };
    let groups = run_ensemble(&spec)?;
    let samples = groups[0].w_samples(0);
    let ode = mean_field(config, t)?;
    let sigma = limit_covariance(&config.params(n)?, &ode, t)?;
    let sigma_t = sigma.at(t)?;
    let c = config.component - 1;
    let theory = sigma_t.get(c, c);
    let report = normality_report(&samples, config.component, theory)?;

    write_file_io(&w.path("w_samples.csv"), |out| write_w_samples(out, &samples))?;
    write_file_io(&w.path("sigma.csv"), |out| write_sigma(out, &sigma, 1))?;
    write_file_io(&w.path("histogram.csv"), |out| write_histogram(out, &report))?;

    let mean = report.sample_mean[c];
    let var = report.sample_variance[c];
    let gates = vec![
        GateCheck {
            name: "ks_p_above_0.01".into(),
            passed: report.ks_p > 0.01,
            detail: format!("ks_p = {}", report.ks_p),
        },
        GateCheck {
            name: "mean_within_4_se".into(),
            passed: mean.abs() <= 4.0 * report.mean_std_error,
            detail: format!("mean = {mean}, se = {}", report.mean_std_error),
        },
        GateCheck {
            name: "variance_within_15_percent".into(),
            passed: (var / theory - 1.0).abs() <= 0.15,
            detail: format!("sample variance = {var}, limit variance = {theory}"),
        },
    ];
    let summary = json!({
        "study": "fluctuation",
        "n": n,
        "t": t,
        "runs": config.runs,
        "component": config.component,
        "ks_statistic": report.ks_statistic,
        "ks_p": report.ks_p,
        "means": report.sample_mean,
        "variances": report.sample_variance,
        "mean_std_error": report.mean_std_error,
        "limit_variance": theory,
        "limit_covariance": sigma_t.upper(),
        "fitted_normal": { "mean": report.fitted_normal.0, "std": report.fitted_normal.1 },
    });
    Ok((summary, gates))
}

fn scaling_study(config: &RunConfig, w: &mut Writer) -> Result<(Value, Vec<GateCheck>)> {
    let n_values = config.resolved_n_values(StudyKind::Scaling);
    let t = config.t_obs;
    let spec = EnsembleSpec {
        base: base_config(config, n_values[0], t, RecordMode::EndpointOnly)?,
        initial_fractions: config.initial_fractions(),
        n_runs: config.runs,
        n_values,
        observe_times: vec![t],
        grid_dt: None,
    };
    let groups = run_ensemble(&spec)?;
    let points = groups
        .iter()
        .map(|g| g.scaling_point(0))
        .collect::<Result<Vec<ScalingPoint>>>()?;
    let fit = scaling_regression(&points)?;
    write_file_io(&w.path("scaling.csv"), |out| write_scaling(out, &points))?;
    let gates = vec![GateCheck {
        name: "slope_in_range".into(),
        passed: (-0.6..=-0.4).contains(&fit.slope),
        detail: format!("slope = {}, accepted range [-0.6, -0.4]", fit.slope),
    }];
    let summary = json!({
        "study": "scaling",
        "t": t,
        "runs": config.runs,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r2": fit.r2,
        "points": points,
    });
    Ok((summary, gates))
}

/// Run one study, writing its data files and `summary.json` into `out_dir`.
///
/// `out_dir` must exist. Gate checks are always evaluated and recorded in the
/// summary; it is up to the caller whether a failed check is fatal.
pub fn run_study(kind: StudyKind, config: &RunConfig, out_dir: &Path) -> Result<StudyOutput> {
    config.validate()?;
    let mut w = Writer {
        dir: out_dir,
        files: Vec::new(),
    };
    let (mut summary, gates) = match kind {
        StudyKind::Trajectory => trajectory(config, &mut w)?,
        StudyKind::Ode => ode_study(config, &mut w)?,
        StudyKind::Ensemble => ensemble_study(config, &mut w)?,
        StudyKind::Fluctuation => fluctuation_study(config, &mut w)?,
        StudyKind::Scaling => scaling_study(config, &mut w)?,
    };
    summary["gates"] = serde_json::to_value(&gates).expect("serializable");
    w.json("summary.json", &summary)?;
    Ok(StudyOutput {
        kind,
        out_dir: out_dir.to_path_buf(),
        files: w.files,
        gates,
    })
}
