//! One-sample Kolmogorov–Smirnov test and a two-sample chi-square test on
//! binned counts.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// `sup_x |F_n(x) − F(x)|` of the sample against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // dual series converges fast for small λ
        let mut sum = 0.0;
        for j in 1..=20 {
            let k = (2 * j - 1) as f64;
            sum += (-(k * k) * std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of statistic `d` from `n` samples, with Stephens'
/// small-sample correction `λ = (√n + 0.12 + 0.11/√n) d`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let root = (n as f64).sqrt();
    kolmogorov_survival((root + 0.12 + 0.11 / root) * d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample chi-square homogeneity test on paired bin counts.
///
/// Adjacent bins are pooled left to right until every pooled bin has an
/// expected count of at least 5 in both samples.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquareResult {
    assert_eq!(a.len(), b.len(), "bin counts must align");
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let n = na + nb;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut ca, mut cb) = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        ca += x as f64;
        cb += y as f64;
        let tot = ca + cb;
        if tot * na / n >= 5.0 && tot * nb / n >= 5.0 {
            pooled.push((ca, cb));
            ca = 0.0;
            cb = 0.0;
        }
    }
    if ca + cb > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += ca;
                last.1 += cb;
            }
            None => pooled.push((ca, cb)),
        }
    }
    let mut stat = 0.0;
    for &(x, y) in &pooled {
        let tot = x + y;
        let (ea, eb) = (tot * na / n, tot * nb / n);
        stat += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let dof = pooled.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(stat)
    };
    ChiSquareResult {
        statistic: stat,
        dof,
        p_value,
    }
}
