//! Independent reference implementations used by the integration suites.
//!
//! Nothing here calls the rate, drift or covariance code of the library;
//! each oracle restates the model from scratch.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;

/// Print a line that survives the test harness's output capture.
pub fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[derive(Debug, Clone, Copy)]
pub struct Rates {
    pub nu: f64,
    pub gamma: f64,
    pub beta0: f64,
    pub beta1: f64,
}

impl Rates {
    pub const SEASONAL: Rates = Rates {
        nu: 1.0,
        gamma: 10.0,
        beta0: 20.0,
        beta1: 0.4,
    };

    pub fn beta(&self, t: f64) -> f64 {
        self.beta0 * (1.0 + self.beta1 * (2.0 * PI * t).cos())
    }

    /// Rates and `(dS, dI, dR)` jumps of the six transitions.
    pub fn transitions(&self, s: f64, i: f64, r: f64, t: f64) -> [(f64, [f64; 3]); 6] {
        let total = s + i + r;
        let contact = if total > 0.0 { self.beta(t) * s * i / total } else { 0.0 };
        [
            (self.nu * total, [1.0, 0.0, 0.0]),
            (self.nu * s, [-1.0, 0.0, 0.0]),
            (contact, [-1.0, 1.0, 0.0]),
            (self.gamma * i, [0.0, -1.0, 1.0]),
            (self.nu * i, [0.0, -1.0, 0.0]),
            (self.nu * r, [0.0, 0.0, -1.0]),
        ]
    }

    /// Mean-field vector field: expected jump per unit time.
    pub fn field(&self, y: [f64; 3], t: f64) -> [f64; 3] {
        let mut f = [0.0; 3];
        for (rate, jump) in self.transitions(y[0], y[1], y[2], t) {
            for c in 0..3 {
                f[c] += rate * jump[c];
            }
        }
        f
    }

    /// Infinitesimal covariance `Σ rate · jump jumpᵀ`.
    pub fn covariance(&self, y: [f64; 3], t: f64) -> [[f64; 3]; 3] {
        let mut g = [[0.0; 3]; 3];
        for (rate, jump) in self.transitions(y[0], y[1], y[2], t) {
            for a in 0..3 {
                for b in 0..3 {
                    g[a][b] += rate * jump[a] * jump[b];
                }
            }
        }
        g
    }
}

/// Plain RK4 for the mean-field ODE; returns the state at every step.
pub fn rk4_path(rates: &Rates, y0: [f64; 3], t_end: f64, h: f64) -> Vec<[f64; 3]> {
    let steps = (t_end / h).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push(y);
    let add = |y: [f64; 3], k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    for n in 0..steps {
        let t = n as f64 * h;
        let k1 = rates.field(y, t);
        let k2 = rates.field(add(y, k1, h / 2.0), t + h / 2.0);
        let k3 = rates.field(add(y, k2, h / 2.0), t + h / 2.0);
        let k4 = rates.field(add(y, k3, h), t + h);
        for c in 0..3 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        out.push(y);
    }
    out
}

/// `∫₀ᵗ G` along the mean-field path by the trapezoid rule with step `h`.
pub fn trapezoid_sigma(rates: &Rates, y0: [f64; 3], t_end: f64, h: f64) -> [[f64; 3]; 3] {
    let path = rk4_path(rates, y0, t_end, h);
    let mut acc = [[0.0; 3]; 3];
    let last = path.len() - 1;
    for (n, y) in path.iter().enumerate() {
        let w = if n == 0 || n == last { 0.5 * h } else { h };
        let g = rates.covariance(*y, n as f64 * h);
        for a in 0..3 {
            for b in 0..3 {
                acc[a][b] += w * g[a][b];
            }
        }
    }
    acc
}

/// Textbook direct-method simulation without thinning; only valid for `β₁ = 0`.
pub fn gillespie_homogeneous<R: Rng>(rates: &Rates, start: [u64; 3], t_end: f64, rng: &mut R) -> [u64; 3] {
    assert_eq!(rates.beta1, 0.0);
    let mut x = start.map(|v| v as i64);
    let mut t = 0.0;
    loop {
        let tr = rates.transitions(x[0] as f64, x[1] as f64, x[2] as f64, 0.0);
        let total: f64 = tr.iter().map(|(r, _)| r).sum();
        if total <= 0.0 {
            break;
        }
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / total;
        if t > t_end {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = 5;
        for (k, (r, _)) in tr.iter().enumerate() {
            if target < *r {
                pick = k;
                break;
            }
            target -= r;
        }
        while tr[pick].0 == 0.0 {
            pick -= 1;
        }
        for c in 0..3 {
            x[c] += tr[pick].1[c] as i64;
        }
    }
    x.map(|v| v as u64)
}

/// Law of `(S, I, R)(t)` for a closed population (`ν = 0`) by integrating the
/// forward equation with RK4 at step `h`.
pub fn closed_population_law(rates: &Rates, start: [u64; 3], t_end: f64, h: f64) -> BTreeMap<[u64; 3], f64> {
    assert_eq!(rates.nu, 0.0);
    let total = start.iter().sum::<u64>();
    let mut states = Vec::new();
    for s in 0..=total {
        for i in 0..=total - s {
            states.push([s, i, total - s - i]);
        }
    }
    let index: BTreeMap<[u64; 3], usize> = states.iter().enumerate().map(|(k, s)| (*s, k)).collect();
    // outgoing transitions (target, rate coefficient kind) of every state
    let deriv = |p: &[f64], t: f64| -> Vec<f64> {
        let mut dp = vec![0.0; p.len()];
        for (k, st) in states.iter().enumerate() {
            let tr = rates.transitions(st[0] as f64, st[1] as f64, st[2] as f64, t);
            for (rate, jump) in tr {
                if rate == 0.0 {
                    continue;
                }
                let next = [
                    (st[0] as f64 + jump[0]) as u64,
                    (st[1] as f64 + jump[1]) as u64,
                    (st[2] as f64 + jump[2]) as u64,
                ];
                let flow = rate * p[k];
                dp[k] -= flow;
                dp[index[&next]] += flow;
            }
        }
        dp
    };
    let mut p = vec![0.0; states.len()];
    p[index[&start]] = 1.0;
    let steps = (t_end / h).round() as usize;
    for n in 0..steps {
        let t = n as f64 * h;
        let k1 = deriv(&p, t);
        let y2: Vec<f64> = p.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
        let k2 = deriv(&y2, t + 0.5 * h);
        let y3: Vec<f64> = p.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
        let k3 = deriv(&y3, t + 0.5 * h);
        let y4: Vec<f64> = p.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let k4 = deriv(&y4, t + h);
        for k in 0..p.len() {
            p[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
    }
    states.into_iter().zip(p).collect()
}

/// Does the total of a birth-death chain with per-capita rates `ν` started at
/// `n` leave `[n(1-ε), n(1+ε)]` before `t_end`?
pub fn total_chain_exits<R: Rng>(n: u64, nu: f64, eps: f64, t_end: f64, rng: &mut R) -> bool {
    let band = eps * n as f64;
    let mut total = n as f64;
    let mut t = 0.0;
    while total > 0.0 {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / (2.0 * nu * total);
        if t > t_end {
            return false;
        }
        total += if rng.random::<bool>() { 1.0 } else { -1.0 };
        if (total - n as f64).abs() > band {
            return true;
        }
    }
    true
}

/// Classical final-size root of `ln(x/x₀) = R₀ (x − x₀ − y₀)` on `(0, 1/R₀)`.
pub fn final_size(r0: f64, x0: f64, y0: f64) -> f64 {
    let g = |x: f64| (x / x0).ln() - r0 * (x - x0 - y0);
    let (mut lo, mut hi) = (1e-300, 1.0 / r0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
