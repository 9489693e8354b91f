use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, PopulationState};
use crate::sim::DEFAULT_EVENT_BUDGET;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Trajectory,
    Ode,
    Ensemble,
    Fluctuation,
    Scaling,
}

impl StudyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StudyKind::Trajectory => "trajectory",
            StudyKind::Ode => "ode",
            StudyKind::Ensemble => "ensemble",
            StudyKind::Fluctuation => "fluctuation",
            StudyKind::Scaling => "scaling",
        }
    }

    /// Parse a subcommand or study name; `simulate` is an alias for `trajectory`.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "simulate" | "trajectory" => Some(StudyKind::Trajectory),
            "ode" => Some(StudyKind::Ode),
            "ensemble" => Some(StudyKind::Ensemble),
            "fluctuation" => Some(StudyKind::Fluctuation),
            "scaling" => Some(StudyKind::Scaling),
            _ => None,
        }
    }

    /// Population sizes used when the config gives none.
    pub fn default_n_values(self) -> Vec<u64> {
        match self {
            StudyKind::Ensemble => vec![1_000, 10_000, 100_000],
            StudyKind::Scaling => vec![1_000, 3_162, 10_000, 31_623, 100_000],
            _ => Vec::new(),
        }
    }
}

/// A study configuration as read from JSON. Every field has a default; the
/// model defaults are the standard seasonal setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Must match the subcommand when present.
    pub study: Option<StudyKind>,
    pub beta0: f64,
    pub beta1: f64,
    pub gamma: f64,
    pub nu: f64,
    pub s0_frac: f64,
    pub i0_frac: f64,
    pub r0_frac: f64,
    /// Population scale for single-N studies.
    pub n: u64,
    pub t_end: f64,
    /// Observation time and horizon for fluctuation and scaling studies.
    pub t_obs: f64,
    /// RK4 step.
    pub h: f64,
    /// Sampling grid spacing for paths.
    pub dt: f64,
    pub runs: u64,
    /// Population sizes for ensemble and scaling studies.
    pub n_values: Option<Vec<u64>>,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// 1-based component of `W_N` tested in fluctuation studies.
    pub component: usize,
    /// Write the full event log in trajectory studies.
    pub event_log: bool,
    pub epsilon: Option<f64>,
    pub event_budget: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            study: None,
            beta0: 20.0,
            beta1: 0.4,
            gamma: 10.0,
            nu: 1.0,
            s0_frac: 0.92,
            i0_frac: 0.08,
            r0_frac: 0.0,
            n: 10_000,
            t_end: 2.0,
            t_obs: 1.0,
            h: 1e-3,
            dt: 1e-2,
            runs: 500,
            n_values: None,
            seed: 1,
            out_dir: PathBuf::from("out"),
            component: 2,
            event_log: false,
            epsilon: None,
            event_budget: DEFAULT_EVENT_BUDGET,
        }
    }
}

/// Is `a` an integer multiple of `b` up to rounding?
fn is_multiple(a: f64, b: f64) -> bool {
    let k = (a / b).round();
    k >= 1.0 && (k * b - a).abs() <= 1e-9 * b
}

impl RunConfig {
    pub fn params(&self, n: u64) -> Result<ModelParams> {
        ModelParams::new(self.nu, self.gamma, self.beta0, self.beta1, n)
    }

    pub fn initial_fractions(&self) -> [f64; 3] {
        [self.s0_frac, self.i0_frac, self.r0_frac]
    }

    pub fn initial_state(&self, n: u64) -> Result<PopulationState> {
        PopulationState::from_fractions(n, self.initial_fractions())
    }

    /// Population sizes for multi-N studies, falling back to the study default.
    pub fn resolved_n_values(&self, kind: StudyKind) -> Vec<u64> {
        self.n_values.clone().unwrap_or_else(|| kind.default_n_values())
    }

    /// Check every field; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        self.params(self.n)?;
        for (field, v) in [("s0_frac", self.s0_frac), ("i0_frac", self.i0_frac), ("r0_frac", self.r0_frac)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(field, format!("must be a nonnegative fraction, got {v}")));
            }
        }
        let sum = self.s0_frac + self.i0_frac + self.r0_frac;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("s0_frac", format!("initial fractions must sum to 1, got {sum}")));
        }
        if self.n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        for (field, v) in [("t_end", self.t_end), ("t_obs", self.t_obs), ("h", self.h), ("dt", self.dt)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, format!("must be positive, got {v}")));
            }
        }
        if self.h > self.t_end {
            return Err(Error::invalid("h", format!("must not exceed t_end = {}", self.t_end)));
        }
        if self.h > self.t_obs {
            return Err(Error::invalid("h", format!("must not exceed t_obs = {}", self.t_obs)));
        }
        if !is_multiple(self.dt, self.h) {
            return Err(Error::invalid("dt", format!("must be a multiple of h = {}", self.h)));
        }
        if !is_multiple(self.t_obs, self.h) {
            return Err(Error::invalid("t_obs", format!("must be a multiple of h = {}", self.h)));
        }
        if self.runs < 2 {
            return Err(Error::invalid("runs", "need at least 2 runs"));
        }
        if let Some(ns) = &self.n_values {
            if ns.len() < 2 || ns.contains(&0) || ns.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(
                    "n_values",
                    "need at least two positive, strictly increasing sizes",
                ));
            }
        }
        if !(1..=3).contains(&self.component) {
            return Err(Error::invalid("component", format!("must be 1, 2 or 3, got {}", self.component)));
        }
        if let Some(eps) = self.epsilon {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(Error::invalid("epsilon", format!("must be positive, got {eps}")));
            }
        }
        if self.event_budget == 0 {
            return Err(Error::invalid("event_budget", "must be positive"));
        }
        Ok(())
    }
}

/// Parse and validate a JSON study configuration.
///
/// Malformed JSON and unknown keys become [`Error::Config`] with the line and
/// column of the problem; out-of-range values become
/// [`Error::InvalidParameter`] naming the field.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("{e}")))?;
    config.validate()?;
    Ok(config)
}
