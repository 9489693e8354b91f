//! Exact simulation of the seasonally forced stochastic SIR model, its
//! mean-field ODE, and the Gaussian fluctuation limit around it.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: parameters, states, β(t) and the per-event rate tables;
//! * [`sim`]: exact path simulation by thinning, plus the coupled
//!   original/truncated construction;
//! * [`ode`]: the mean-field drift and a fixed-step RK4 integrator;
//! * [`fluctuation`]: the centred, √N-scaled fluctuation process and its
//!   limiting covariance;
//! * [`stats`]: ensembles and the statistics used to check both limit laws;
//! * [`cli`]: config parsing, study orchestration and file output.

pub mod cli;
pub mod error;
pub mod export;
pub mod fluctuation;
pub mod model;
pub mod ode;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use model::{apply_event, event_rate, truncated_event_rate, EventKind, FractionState, ModelParams, PopulationState};
pub use sim::{simulate, simulate_coupled, RecordMode, SimConfig, Trajectory, Truncation};
