use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fluctuation::FluctuationSample;

use super::histogram::Histogram;
use super::ks::{ks_p_value, ks_statistic};
use super::moments::Moments;

pub const MIN_NORMALITY_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    /// 1-based component index that was tested.
    pub component: usize,
    pub n_samples: usize,
    pub sample_mean: [f64; 3],
    pub sample_std: [f64; 3],
    pub sample_variance: [f64; 3],
    /// Standard error of the tested component's mean.
    pub mean_std_error: f64,
    pub theory_variance: f64,
    pub ks_statistic: f64,
    pub ks_p: f64,
    /// Maximum-likelihood normal fit `(mean, std)` of the tested component.
    pub fitted_normal: (f64, f64),
    pub histogram: Histogram,
}

impl NormalityReport {
    /// Rows `(left, right, count, density, fitted_pdf, theory_pdf)` for plotting.
    pub fn histogram_rows(&self) -> Vec<[f64; 6]> {
        let fitted = Normal::new(self.fitted_normal.0, self.fitted_normal.1).ok();
        let theory = Normal::new(0.0, self.theory_variance.sqrt()).ok();
        let dens = self.histogram.densities();
        self.histogram
            .edges
            .windows(2)
            .zip(&self.histogram.counts)
            .zip(dens)
            .map(|((w, &c), d)| {
                let mid = 0.5 * (w[0] + w[1]);
                [
                    w[0],
                    w[1],
                    c as f64,
                    d,
                    fitted.map_or(f64::NAN, |n| n.pdf(mid)),
                    theory.map_or(f64::NAN, |n| n.pdf(mid)),
                ]
            })
            .collect()
    }
}

/// Test one component of `W_N` against the fully specified `Normal(0, theory_var)`.
pub fn normality_report(
    samples: &[FluctuationSample],
    component: usize,
    theory_var: f64,
) -> Result<NormalityReport> {
    if !(1..=3).contains(&component) {
        return Err(Error::invalid("component", format!("must be 1, 2 or 3, got {component}")));
    }
    if samples.len() < MIN_NORMALITY_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "normality test needs at least {MIN_NORMALITY_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(theory_var > 0.0 && theory_var.is_finite()) {
        return Err(Error::invalid("theory_var", format!("must be positive, got {theory_var}")));
    }
    let values: Vec<f64> = samples.iter().map(|s| s.w[component - 1]).collect();
    let per_component: Vec<Moments> = (0..3)
        .map(|c| Moments::from_slice(&samples.iter().map(|s| s.w[c]).collect::<Vec<_>>()))
        .collect();
    let m = per_component[component - 1];
    if !(m.variance() > 0.0) {
        return Err(Error::DegenerateSample(format!(
            "component {component} has zero variance"
        )));
    }
    let theory = Normal::new(0.0, theory_var.sqrt()).expect("positive variance");
    let d = ks_statistic(&values, |x| theory.cdf(x));
    Ok(NormalityReport {
        component,
        n_samples: values.len(),
        sample_mean: [0, 1, 2].map(|c| per_component[c].mean),
        sample_std: [0, 1, 2].map(|c| per_component[c].std()),
        sample_variance: [0, 1, 2].map(|c| per_component[c].variance()),
        mean_std_error: m.std_error(),
        theory_variance: theory_var,
        ks_statistic: d,
        ks_p: ks_p_value(d, values.len()),
        fitted_normal: (m.mean, m.variance_ml().sqrt()),
        histogram: Histogram::freedman_diaconis(&values),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand_distr::{Distribution, Normal as Gauss};

    fn wrap(values: &[f64]) -> Vec<FluctuationSample> {
        values
            .iter()
            .map(|&v| FluctuationSample {
                t: 1.0,
                w: [0.5 * v, v, -v + 0.1],
                n_scale: 100,
            })
            .collect()
    }

    #[test]
    fn self_test_reject_rate_near_nominal() {
        let var: f64 = 2.5;
        let gauss = Gauss::new(0.0, var.sqrt()).unwrap();
        let mut rejects = 0;
        for trial in 0..1000 {
            let mut rng = RngStream::new(77, trial);
            let xs: Vec<f64> = (0..200).map(|_| gauss.sample(&mut rng)).collect();
            let rep = normality_report(&wrap(&xs), 2, var).unwrap();
            assert!((0.0..=1.0).contains(&rep.ks_statistic));
            if rep.ks_p < 0.05 {
                rejects += 1;
            }
        }
        let rate = rejects as f64 / 1000.0;
        assert!((0.03..=0.07).contains(&rate), "reject rate {rate}");
    }

    #[test]
    fn scaling_doubles_fitted_std() {
        let gauss = Gauss::new(0.3, 1.2).unwrap();
        let mut rng = RngStream::new(5, 0);
        let xs: Vec<f64> = (0..500).map(|_| gauss.sample(&mut rng)).collect();
        let doubled: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let a = normality_report(&wrap(&xs), 2, 1.0).unwrap();
        let b = normality_report(&wrap(&doubled), 2, 1.0).unwrap();
        assert_eq!(b.fitted_normal.1, 2.0 * a.fitted_normal.1);
        assert_eq!(b.fitted_normal.0, 2.0 * a.fitted_normal.0);
    }

    #[test]
    fn wrong_variance_is_rejected() {
        let gauss = Gauss::new(0.0, 1.0).unwrap();
        let mut rng = RngStream::new(6, 0);
        let xs: Vec<f64> = (0..2000).map(|_| gauss.sample(&mut rng)).collect();
        assert!(normality_report(&wrap(&xs), 2, 1.0).unwrap().ks_p > 0.01);
        assert!(normality_report(&wrap(&xs), 2, 2.0).unwrap().ks_p < 1e-6);
    }

    #[test]
    fn error_paths() {
        let xs = vec![1.0; 150];
        assert!(matches!(normality_report(&wrap(&xs), 2, 1.0), Err(Error::DegenerateSample(_))));
        assert!(matches!(normality_report(&wrap(&xs[..50]), 2, 1.0), Err(Error::InsufficientData(_))));
        assert!(normality_report(&wrap(&xs), 4, 1.0).is_err());
        assert!(normality_report(&wrap(&xs), 0, 1.0).is_err());
    }

    #[test]
    fn histogram_rows_have_curves() {
        let gauss = Gauss::new(0.0, 1.0).unwrap();
        let mut rng = RngStream::new(8, 0);
        let xs: Vec<f64> = (0..400).map(|_| gauss.sample(&mut rng)).collect();
        let rep = normality_report(&wrap(&xs), 2, 1.0).unwrap();
        let rows = rep.histogram_rows();
        assert_eq!(rows.len(), rep.histogram.counts.len());
        assert!(rows.iter().all(|r| r[4] > 0.0 && r[5] > 0.0));
    }
}
