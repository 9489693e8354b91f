//! Fluctuations around the drift: `W_N(t) = √N (ξ_t − ξ_0 − ∫₀ᵗ F(ξ_s, s) ds)`
//! with `ξ = counts / N`, the infinitesimal covariance `G`, and the limiting
//! covariance `Σ(t) = ∫₀ᵗ G(x_s, s) ds` along the ODE path.
//!
//! In the large-N limit `W_N(t)` is centred Gaussian with covariance `Σ(t)`,
//! so its characteristic function is `exp(−½ θᵀ Σ(t) θ)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FractionState, ModelParams, PopulationState};
use crate::ode::{contact_term, drift_integral_until, OdeSolution};
use crate::sim::Trajectory;

/// Symmetric 3×3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CovMatrix(pub [[f64; 3]; 3]);

impl CovMatrix {
    pub const ZERO: CovMatrix = CovMatrix([[0.0; 3]; 3]);

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn quadratic_form(&self, v: &[f64; 3]) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += v[i] * self.0[i][j] * v[j];
            }
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Upper triangle `(s11, s12, s13, s22, s23, s33)`.
    pub fn upper(&self) -> [f64; 6] {
        let m = &self.0;
        [m[0][0], m[0][1], m[0][2], m[1][1], m[1][2], m[2][2]]
    }

    fn axpy(&mut self, a: f64, other: &CovMatrix) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += a * other.0[i][j];
            }
        }
    }
}

/// Infinitesimal covariance `G(x, t)` of the fraction process (scaled by `N`).
pub fn cov_matrix(params: &ModelParams, state: &FractionState, t: f64) -> CovMatrix {
    let FractionState { x, y, z } = *state;
    if state.mass() <= 0.0 {
        return CovMatrix::ZERO;
    }
    let (nu, gamma) = (params.nu, params.gamma);
    let infection = params.beta_at(t) * contact_term(state);
    let g11 = nu * (2.0 * x + y + z) + infection;
    let g12 = -infection;
    let g22 = infection + (nu + gamma) * y;
    let g23 = -gamma * y;
    let g33 = nu * z + gamma * y;
    CovMatrix([[g11, g12, 0.0], [g12, g22, g23], [0.0, g23, g33]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluctuationSample {
    pub t: f64,
    pub w: [f64; 3],
    pub n_scale: u64,
}

impl FluctuationSample {
    /// Assemble `W_N(t)` from the endpoint state and the drift integral up to `t`.
    pub fn from_parts(
        t: f64,
        initial: &PopulationState,
        state: &PopulationState,
        drift: &[f64; 3],
        n_scale: u64,
    ) -> Self {
        let xi0 = initial.scaled(n_scale).as_array();
        let xi = state.scaled(n_scale).as_array();
        let root_n = (n_scale as f64).sqrt();
        let mut w = [0.0; 3];
        for c in 0..3 {
            w[c] = root_n * (xi[c] - xi0[c] - drift[c]);
        }
        FluctuationSample { t, w, n_scale }
    }

    /// `Z_N(t) = W_N(t) / √N`.
    pub fn centred(&self) -> [f64; 3] {
        let root_n = (self.n_scale as f64).sqrt();
        self.w.map(|v| v / root_n)
    }
}

/// `W_N` at each requested time, using the exact drift integral of the path.
pub fn w_of_trajectory(
    traj: &Trajectory,
    params: &ModelParams,
    times: &[f64],
) -> Result<Vec<FluctuationSample>> {
    if traj.events.is_none() {
        return Err(Error::MissingEventLog);
    }
    times
        .iter()
        .map(|&t| {
            if !(0.0..=traj.t_end).contains(&t) {
                return Err(Error::OutOfRange {
                    t,
                    horizon: traj.t_end,
                });
            }
            let drift = drift_integral_until(params, traj, t)?;
            let state = traj.state_at(t)?;
            Ok(FluctuationSample::from_parts(t, &traj.initial, &state, &drift, params.n_scale))
        })
        .collect()
}

/// `Σ(t)` tabulated on every other ODE grid point (Simpson panels of width `2h`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCovariance {
    pub times: Vec<f64>,
    pub sigma: Vec<CovMatrix>,
    /// Width of one Simpson panel.
    pub panel: f64,
}

impl LimitCovariance {
    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    /// `Σ(t)`, exact at tabulated times and linearly interpolated in between.
    pub fn at(&self, t: f64) -> Result<CovMatrix> {
        let horizon = self.t_end();
        let tol = 1e-9 * self.panel;
        if t < -tol || t > horizon + tol {
            return Err(Error::OutOfRange { t, horizon });
        }
        let k = self.times.partition_point(|&s| s < t - tol);
        if k < self.times.len() && (self.times[k] - t).abs() <= tol {
            return Ok(self.sigma[k]);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        let mut out = self.sigma[k - 1];
        out.axpy(-w, &self.sigma[k - 1]);
        out.axpy(w, &self.sigma[k]);
        Ok(out)
    }
}

/// Integrate `G` along the ODE solution by composite Simpson's rule.
///
/// `t_end` must be an ODE grid time on the uniform part of the grid. With an
/// odd number of steps the last three steps use Simpson's 3/8 rule.
pub fn limit_covariance(params: &ModelParams, ode: &OdeSolution, t_end: f64) -> Result<LimitCovariance> {
    let m = ode.index_of(t_end).ok_or_else(|| {
        Error::GridMismatch(format!("t_end = {t_end} is not a grid time of the ODE solution"))
    })?;
    let h = ode.step();
    let times = ode.times();
    if m >= 1 && ((times[m] - times[m - 1]) - h).abs() > 1e-9 * h {
        return Err(Error::GridMismatch(format!(
            "ODE step ending at {t_end} is not the uniform step {h}"
        )));
    }
    let g: Vec<CovMatrix> = ode
        .iter()
        .take(m + 1)
        .map(|(t, x)| cov_matrix(params, &x, t))
        .collect();

    let mut out_t = vec![0.0];
    let mut out_s = vec![CovMatrix::ZERO];
    let mut acc = CovMatrix::ZERO;
    let simpson_end = if m % 2 == 0 || m < 3 { m - m % 2 } else { m - 3 };
    let mut k = 0;
    while k + 2 <= simpson_end {
        acc.axpy(h / 3.0, &g[k]);
        acc.axpy(4.0 * h / 3.0, &g[k + 1]);
        acc.axpy(h / 3.0, &g[k + 2]);
        k += 2;
        out_t.push(times[k]);
        out_s.push(acc);
    }
    if k < m {
        if m - k == 3 {
            acc.axpy(3.0 * h / 8.0, &g[k]);
            acc.axpy(9.0 * h / 8.0, &g[k + 1]);
            acc.axpy(9.0 * h / 8.0, &g[k + 2]);
            acc.axpy(3.0 * h / 8.0, &g[k + 3]);
        } else {
            // a single step: trapezoid
            acc.axpy(h / 2.0, &g[k]);
            acc.axpy(h / 2.0, &g[k + 1]);
        }
        out_t.push(times[m]);
        out_s.push(acc);
    }

    Ok(LimitCovariance {
        times: out_t,
        sigma: out_s,
        panel: 2.0 * h,
    })
}

/// Characteristic function of the limit, `exp(−½ θᵀ Σ(t) θ)`.
///
/// The limit is centred Gaussian, so the value is real and lies in `(0, 1]`.
pub fn limit_char_function(sigma: &LimitCovariance, t: f64, theta: &[f64; 3]) -> Result<f64> {
    let s = sigma.at(t)?;
    Ok((-0.5 * s.quadratic_form(theta)).exp())
}

/// Empirical `E exp(i θ·W)` as `(re, im)`.
pub fn empirical_char_function(samples: &[FluctuationSample], theta: &[f64; 3]) -> (f64, f64) {
    let n = samples.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for s in samples {
        let phase = theta[0] * s.w[0] + theta[1] * s.w[1] + theta[2] * s.w[2];
        re += phase.cos();
        im += phase.sin();
    }
    (re / n, im / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EventKind;
    use crate::ode::integrate;
    use crate::sim::{simulate, SimConfig};
    use proptest::prelude::*;

    fn seasonal() -> ModelParams {
        ModelParams::seasonal_default(100_000)
    }

    /// Independent assembly: Σ_events rate · jump jumpᵀ on the fraction scale.
    fn cov_from_jumps(p: &ModelParams, st: &FractionState, t: f64) -> [[f64; 3]; 3] {
        let FractionState { x, y, z } = *st;
        let m = x + y + z;
        let rates = [
            (EventKind::Birth, p.nu * m),
            (EventKind::SusceptibleDeath, p.nu * x),
            (EventKind::Infection, p.beta_at(t) * x * y / m),
            (EventKind::Recovery, p.gamma * y),
            (EventKind::InfectiousDeath, p.nu * y),
            (EventKind::RecoveredDeath, p.nu * z),
        ];
        let mut out = [[0.0; 3]; 3];
        for (kind, rate) in rates {
            let j = kind.jump().map(|v| v as f64);
            for a in 0..3 {
                for b in 0..3 {
                    out[a][b] += rate * j[a] * j[b];
                }
            }
        }
        out
    }

    #[test]
    fn disease_free_state() {
        let g = cov_matrix(&seasonal(), &FractionState::new(1.0, 0.0, 0.0), 0.4);
        let mut expected = CovMatrix::ZERO;
        expected.0[0][0] = 2.0;
        assert_eq!(g, expected);
        assert_eq!(cov_matrix(&seasonal(), &FractionState::default(), 0.0), CovMatrix::ZERO);
    }

    #[test]
    fn structure_symmetric_with_corner_zeros() {
        let g = cov_matrix(&seasonal(), &FractionState::new(0.5, 0.3, 0.2), 0.1);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.get(i, j), g.get(j, i));
            }
        }
        assert_eq!(g.get(0, 2), 0.0);
    }

    proptest! {
        #[test]
        fn matches_jump_assembly(a in 0.0f64..1.0, b in 0.0f64..1.0, t in 0.0f64..5.0, scale in 0.5f64..1.5) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let st = FractionState::new(lo * scale, (hi - lo) * scale, (1.0 - hi) * scale);
            prop_assume!(st.mass() > 0.0);
            let g = cov_matrix(&seasonal(), &st, t);
            let j = cov_from_jumps(&seasonal(), &st, t);
            for r in 0..3 {
                for c in 0..3 {
                    prop_assert!((g.0[r][c] - j[r][c]).abs() <= 1e-12 * (1.0 + j[r][c].abs()));
                }
            }
            let ones = [1.0, 1.0, 1.0];
            prop_assert!((g.quadratic_form(&ones) - 2.0 * seasonal().nu * st.mass()).abs() <= 1e-12);
        }
    }

    #[test]
    fn w_at_time_zero_and_at_equilibrium() {
        let p = ModelParams::seasonal_default(1000);
        let traj = simulate(&SimConfig::new(p, 1.0, 3), PopulationState::new(920, 80, 0)).unwrap();
        let w = w_of_trajectory(&traj, &p, &[0.0]).unwrap();
        assert_eq!(w[0].w, [0.0; 3]);

        let frozen = ModelParams::new(0.0, 10.0, 20.0, 0.4, 1000).unwrap();
        let traj = simulate(&SimConfig::new(frozen, 1.0, 3), PopulationState::new(1000, 0, 0)).unwrap();
        for s in w_of_trajectory(&traj, &frozen, &[0.0, 0.5, 1.0]).unwrap() {
            assert_eq!(s.w, [0.0; 3]);
        }
    }

    #[test]
    fn w_beyond_horizon_is_an_error() {
        let p = ModelParams::seasonal_default(100);
        let traj = simulate(&SimConfig::new(p, 1.0, 3), PopulationState::new(92, 8, 0)).unwrap();
        assert!(matches!(
            w_of_trajectory(&traj, &p, &[1.5]),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn w_endpoint_matches_inline_drift() {
        let p = ModelParams::seasonal_default(2000);
        let traj = simulate(&SimConfig::new(p, 1.0, 11), PopulationState::new(1840, 160, 0)).unwrap();
        let from_log = w_of_trajectory(&traj, &p, &[1.0]).unwrap()[0];
        let inline = FluctuationSample::from_parts(1.0, &traj.initial, &traj.final_state, &traj.drift_integral, p.n_scale);
        for c in 0..3 {
            assert!((from_log.w[c] - inline.w[c]).abs() < 1e-10);
        }
    }

    #[test]
    fn sigma_at_zero_and_char_function_edges() {
        let p = seasonal();
        let ode = integrate(&p, FractionState::new(0.92, 0.08, 0.0), 1.0, 1e-3).unwrap();
        let sig = limit_covariance(&p, &ode, 1.0).unwrap();
        assert_eq!(sig.at(0.0).unwrap(), CovMatrix::ZERO);
        assert_eq!(sig.times.len(), 501);
        assert_eq!(limit_char_function(&sig, 0.0, &[1.0, -2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(limit_char_function(&sig, 0.7, &[0.0; 3]).unwrap(), 1.0);
        let v = limit_char_function(&sig, 1.0, &[0.3, 0.5, -0.2]).unwrap();
        assert!(v > 0.0 && v < 1.0);
        assert!(sig.at(1.2).is_err());
    }

    #[test]
    fn sigma_monotone_in_every_direction() {
        let p = seasonal();
        let ode = integrate(&p, FractionState::new(0.92, 0.08, 0.0), 2.0, 1e-3).unwrap();
        let sig = limit_covariance(&p, &ode, 2.0).unwrap();
        let mut rng = crate::rng::RngStream::new(8, 0);
        for _ in 0..100 {
            let theta: [f64; 3] = std::array::from_fn(|_| 6.0 * rng.uniform() - 3.0);
            let q: Vec<f64> = sig.sigma.iter().map(|s| s.quadratic_form(&theta)).collect();
            assert!(q.windows(2).all(|w| w[1] >= w[0] - 1e-14));
        }
    }

    #[test]
    fn log_char_function_is_quadratic() {
        // parallelogram law: q(a+b) + q(a-b) = 2 q(a) + 2 q(b), q = -2 log φ
        let p = seasonal();
        let ode = integrate(&p, FractionState::new(0.92, 0.08, 0.0), 1.0, 1e-3).unwrap();
        let sig = limit_covariance(&p, &ode, 1.0).unwrap();
        let q = |th: [f64; 3]| -2.0 * limit_char_function(&sig, 1.0, &th).unwrap().ln();
        let pairs = [
            ([0.1, 0.2, -0.3], [0.4, -0.1, 0.05]),
            ([-0.5, 0.0, 0.25], [0.2, 0.3, 0.1]),
            ([0.05, -0.6, 0.3], [-0.1, 0.1, 0.4]),
        ];
        for (a, b) in pairs {
            let sum = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
            let diff = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
            let lhs = q(sum) + q(diff);
            let rhs = 2.0 * q(a) + 2.0 * q(b);
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn odd_step_count_uses_three_eighths_tail() {
        let p = seasonal();
        let ode = integrate(&p, FractionState::new(0.92, 0.08, 0.0), 0.013, 1e-3).unwrap();
        let sig = limit_covariance(&p, &ode, 0.013).unwrap();
        assert!((sig.t_end() - 0.013).abs() < 1e-15);
        let fine = integrate(&p, FractionState::new(0.92, 0.08, 0.0), 0.013, 1e-5).unwrap();
        let reference = limit_covariance(&p, &fine, 0.013).unwrap().at(0.013).unwrap();
        let got = sig.at(0.013).unwrap();
        assert!((got.get(1, 1) - reference.get(1, 1)).abs() < 1e-8 * reference.get(1, 1));
    }

    #[test]
    fn rejects_off_grid_horizon() {
        let p = seasonal();
        let ode = integrate(&p, FractionState::new(0.92, 0.08, 0.0), 1.0, 1e-2).unwrap();
        assert!(matches!(limit_covariance(&p, &ode, 0.505), Err(Error::GridMismatch(_))));
    }
}
