//! Ensemble orchestration and the statistics used to check the fluid and
//! diffusion limits: deviation from the ODE, marginal normality of `W_N`,
//! and the `N^(-1/2)` scaling of the infective fluctuations.

pub mod ensemble;
pub mod histogram;
pub mod ks;
pub mod moments;
pub mod normality;
pub mod regression;

pub use ensemble::{deviation_report, run_ensemble, DeviationReport, EnsembleGroup, EnsembleSpec, RunSummary};
pub use histogram::Histogram;
pub use ks::{chi_square_two_sample, ks_p_value, ks_statistic, ChiSquareResult};
pub use moments::Moments;
pub use normality::{normality_report, NormalityReport};
pub use regression::{scaling_regression, ScalingFit, ScalingPoint};
