use serde::Serialize;

use super::moments::quantile_sorted;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Freedman–Diaconis bins: width `2 IQR / n^(1/3)`, falling back to a
    /// single bin when the spread is zero.
    pub fn freedman_diaconis(samples: &[f64]) -> Histogram {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        if n == 0 {
            return Histogram {
                edges: vec![0.0, 1.0],
                counts: vec![0],
            };
        }
        let (lo, hi) = (sorted[0], sorted[n - 1]);
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        let width = 2.0 * iqr / (n as f64).cbrt();
        let bins = if width > 0.0 && hi > lo {
            (((hi - lo) / width).ceil() as usize).clamp(1, 10_000)
        } else {
            1
        };
        let span = if hi > lo { hi - lo } else { 1.0 };
        let edges: Vec<f64> = (0..=bins).map(|k| lo + span * k as f64 / bins as f64).collect();
        let mut counts = vec![0u64; bins];
        for &x in &sorted {
            let k = (((x - lo) / span) * bins as f64).floor() as usize;
            counts[k.min(bins - 1)] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    /// Count divided by `n * width`, so the bars integrate to one.
    pub fn densities(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.edges
            .windows(2)
            .zip(&self.counts)
            .map(|(w, &c)| c as f64 / (n * (w[1] - w[0])))
            .collect()
    }
}
