use serde::Serialize;

use crate::error::{Error, Result};

/// `log10(ratio)` fitted against `log10(N)` by ordinary least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// One `(N, ratio)` pair on the log-log scaling plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub n: u64,
    /// Standard deviation of the infective component of `Z_N(t)`.
    pub sigma_i: f64,
    /// Mean infective fraction `I(t)/T(t)`.
    pub f_i: f64,
    pub ratio: f64,
}

impl ScalingPoint {
    pub fn new(n: u64, sigma_i: f64, f_i: f64) -> Result<Self> {
        if !(sigma_i >= 0.0) {
            return Err(Error::invalid("sigma_i", format!("must be >= 0, got {sigma_i}")));
        }
        if !(f_i > 0.0) {
            return Err(Error::invalid("f_i", format!("must be > 0 to form a ratio, got {f_i}")));
        }
        Ok(ScalingPoint {
            n,
            sigma_i,
            f_i,
            ratio: sigma_i / f_i,
        })
    }
}

pub fn scaling_regression(points: &[ScalingPoint]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 scaling points, got {}",
            points.len()
        )));
    }
    let mut ns: Vec<u64> = points.iter().map(|p| p.n).collect();
    ns.sort_unstable();
    if ns.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("n", "scaling points need distinct N"));
    }
    if let Some(p) = points.iter().find(|p| !(p.ratio > 0.0)) {
        return Err(Error::invalid("ratio", format!("must be positive, got {} at N = {}", p.ratio, p.n)));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.ratio.log10()).collect();
    Ok(ols(&xs, &ys))
}

pub(crate) fn ols(xs: &[f64], ys: &[f64]) -> ScalingFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    ScalingFit { slope, intercept, r2 }
}
