use std::path::PathBuf;

use crate::model::{EventKind, PopulationState};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// A transition tried to remove an individual from an empty compartment.
    /// This is a simulator bug, never a reachable model state.
    #[error("{kind} applied to {state} would underflow a compartment")]
    Underflow {
        kind: EventKind,
        state: PopulationState,
    },

    #[error("event budget of {budget} exhausted at t = {t} (runaway growth?)")]
    BudgetExceeded { budget: u64, t: f64 },

    #[error("run {run_index} failed: {source}")]
    RunFailed {
        run_index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("requested time {t} lies outside [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("operation needs a full event log but the trajectory was recorded without one")]
    MissingEventLog,

    #[error("step size {h} too large: component {component} reached {value} at t = {t}")]
    StepTooLarge {
        h: f64,
        t: f64,
        component: usize,
        value: f64,
    },

    #[error("time grids do not line up: {0}")]
    GridMismatch(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used in CLI error records and FFI error codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Underflow { .. } => "underflow",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::RunFailed { source, .. } => source.kind(),
            Error::OutOfRange { .. } => "out_of_range",
            Error::MissingEventLog => "missing_event_log",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::DegenerateSample(_) => "degenerate_sample",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
