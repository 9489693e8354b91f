//! Parameters, population states and the per-event rate tables of the
//! seasonally forced SIR chain.
//!
//! Six event kinds act on integer counts `(S, I, R)`:
//!
//! | event             | transition        | rate             |
//! |-------------------|-------------------|------------------|
//! | birth             | S → S+1           | ν (S+I+R)        |
//! | susceptible death | S → S−1           | ν S              |
//! | infection         | S → S−1, I → I+1  | β(t) S I / (S+I+R) |
//! | recovery          | I → I−1, R → R+1  | γ I              |
//! | infectious death  | I → I−1           | ν I              |
//! | recovered death   | R → R−1           | ν R              |
//!
//! with β(t) = β₀ [1 + β₁ cos 2πt]. The truncated variant caps each count at
//! `2N` so that its total rate stays bounded.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Per-capita birth and death rate (1/year).
    pub nu: f64,
    /// Per-capita recovery rate (1/year).
    pub gamma: f64,
    /// Baseline transmission rate (1/year).
    pub beta0: f64,
    /// Seasonal forcing amplitude. Zero selects the unforced chain.
    pub beta1: f64,
    /// Reference population size `N`.
    pub n_scale: u64,
}

impl ModelParams {
    /// Validated constructor.
    ///
    /// `beta1 = 0` (no forcing) and `beta0 = 0` (no transmission) are accepted
    /// as degenerate modes; they serve as oracles for the forced chain.
    pub fn new(nu: f64, gamma: f64, beta0: f64, beta1: f64, n_scale: u64) -> Result<Self> {
        let params = ModelParams {
            nu,
            gamma,
            beta0,
            beta1,
            n_scale,
        };
        params.validate()?;
        Ok(params)
    }

    /// β₀ = 20, β₁ = 0.4, γ = 10, ν = 1 (per year).
    pub fn seasonal_default(n_scale: u64) -> Self {
        ModelParams {
            nu: 1.0,
            gamma: 10.0,
            beta0: 20.0,
            beta1: 0.4,
            n_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::invalid("nu", format!("must be finite and >= 0, got {}", self.nu)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::invalid(
                "gamma",
                format!("must be finite and >= 0, got {}", self.gamma),
            ));
        }
        if !(self.beta0.is_finite() && self.beta0 >= 0.0) {
            return Err(Error::invalid(
                "beta0",
                format!("must be finite and >= 0, got {}", self.beta0),
            ));
        }
        if !(self.beta1.is_finite() && (0.0..1.0).contains(&self.beta1)) {
            return Err(Error::invalid(
                "beta1",
                format!("must lie in [0, 1), got {}", self.beta1),
            ));
        }
        if self.n_scale == 0 {
            return Err(Error::invalid("n_scale", "must be >= 1"));
        }
        Ok(())
    }

    /// Transmission rate β(t) = β₀ [1 + β₁ cos 2πt].
    #[inline]
    pub fn beta_at(&self, t: f64) -> f64 {
        self.beta0 * (1.0 + self.beta1 * (TAU * t).cos())
    }

    /// ∫₀ᵗ β(s) ds = β₀ [t + β₁ sin(2πt) / 2π].
    #[inline]
    pub fn beta_antiderivative(&self, t: f64) -> f64 {
        self.beta0 * (t + self.beta1 * (TAU * t).sin() / TAU)
    }

    /// Upper bound β₀(1+β₁) of the transmission rate, used as the thinning envelope.
    #[inline]
    pub fn beta_max(&self) -> f64 {
        self.beta0 * (1.0 + self.beta1)
    }

    /// Probability of accepting a proposed infection at time `t`.
    ///
    /// Always in `[(1-β₁)/(1+β₁), 1]`.
    #[inline]
    pub fn thinning_ratio(&self, t: f64) -> f64 {
        (1.0 + self.beta1 * (TAU * t).cos()) / (1.0 + self.beta1)
    }

    /// Bound `max{2νN, 2β₀(1+β₁)N, 2γN}` on every truncated per-event rate.
    pub fn truncated_rate_bound(&self) -> f64 {
        let two_n = 2.0 * self.n_scale as f64;
        (self.nu * two_n)
            .max(self.beta_max() * two_n)
            .max(self.gamma * two_n)
    }

    /// The `2N` cap of the truncated chain.
    #[inline]
    pub fn cap(&self) -> u64 {
        self.n_scale.saturating_mul(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PopulationState {
    pub s: u64,
    pub i: u64,
    pub r: u64,
}

impl PopulationState {
    pub const fn new(s: u64, i: u64, r: u64) -> Self {
        PopulationState { s, i, r }
    }

    #[inline]
    pub fn total(&self) -> u64 {
        self.s + self.i + self.r
    }

    /// Counts divided by the reference size `N` (not by the current total).
    pub fn scaled(&self, n_scale: u64) -> FractionState {
        let n = n_scale as f64;
        FractionState::new(self.s as f64 / n, self.i as f64 / n, self.r as f64 / n)
    }

    /// Counts divided by the current total. The empty state maps to zero.
    pub fn fractions(&self) -> FractionState {
        let total = self.total();
        if total == 0 {
            return FractionState::default();
        }
        let t = total as f64;
        FractionState::new(self.s as f64 / t, self.i as f64 / t, self.r as f64 / t)
    }

    /// Largest-remainder rounding of `fractions * n` to counts summing to exactly `n`.
    ///
    /// Ties in the remainder go to the earlier compartment (S, then I, then R).
    pub fn from_fractions(n: u64, fractions: [f64; 3]) -> Result<Self> {
        let sum: f64 = fractions.iter().sum();
        if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "initial fractions",
                format!("must be nonnegative and sum to 1, got {fractions:?}"),
            ));
        }
        let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
        let mut counts: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
        let assigned: u64 = counts.iter().sum();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let mut left = n.saturating_sub(assigned);
        for idx in order.iter().cycle() {
            if left == 0 {
                break;
            }
            counts[*idx] += 1;
            left -= 1;
        }
        Ok(PopulationState::new(counts[0], counts[1], counts[2]))
    }
}

impl fmt::Display for PopulationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(S={}, I={}, R={})", self.s, self.i, self.r)
    }
}

/// Real-valued `(x, y, z)`; population fractions or ODE state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FractionState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FractionState {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        FractionState { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        FractionState::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn mass(&self) -> f64 {
        self.x + self.y + self.z
    }

    /// Rescale onto the simplex `x + y + z = 1`.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0 && m.is_finite()) || self.x < 0.0 || self.y < 0.0 || self.z < 0.0 {
            return Err(Error::invalid(
                "fraction state",
                format!("cannot normalize {self:?}"),
            ));
        }
        Ok(FractionState::new(self.x / m, self.y / m, self.z / m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum EventKind {
    Birth = 0,
    SusceptibleDeath = 1,
    Infection = 2,
    Recovery = 3,
    InfectiousDeath = 4,
    RecoveredDeath = 5,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::Birth,
        EventKind::SusceptibleDeath,
        EventKind::Infection,
        EventKind::Recovery,
        EventKind::InfectiousDeath,
        EventKind::RecoveredDeath,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Birth => "birth",
            EventKind::SusceptibleDeath => "susceptible_death",
            EventKind::Infection => "infection",
            EventKind::Recovery => "recovery",
            EventKind::InfectiousDeath => "infectious_death",
            EventKind::RecoveredDeath => "recovered_death",
        }
    }

    pub fn from_index(idx: u8) -> Option<Self> {
        EventKind::ALL.get(idx as usize).copied()
    }

    /// Change in `(S, I, R)` produced by this event.
    pub fn jump(self) -> [i64; 3] {
        match self {
            EventKind::Birth => [1, 0, 0],
            EventKind::SusceptibleDeath => [-1, 0, 0],
            EventKind::Infection => [-1, 1, 0],
            EventKind::Recovery => [0, -1, 1],
            EventKind::InfectiousDeath => [0, -1, 0],
            EventKind::RecoveredDeath => [0, 0, -1],
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// β(t) S I / T, with the empty population resolved to zero.
#[inline]
fn infection_pressure(beta: f64, s: f64, i: f64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        beta * s * i / total as f64
    }
}

/// Rate of `kind` in the original chain at state `state` and time `t`.
pub fn event_rate(params: &ModelParams, state: &PopulationState, t: f64, kind: EventKind) -> f64 {
    let (s, i, r) = (state.s as f64, state.i as f64, state.r as f64);
    match kind {
        EventKind::Birth => params.nu * state.total() as f64,
        EventKind::SusceptibleDeath => params.nu * s,
        EventKind::Infection => infection_pressure(params.beta_at(t), s, i, state.total()),
        EventKind::Recovery => params.gamma * i,
        EventKind::InfectiousDeath => params.nu * i,
        EventKind::RecoveredDeath => params.nu * r,
    }
}

/// Rate of `kind` in the truncated chain, where counts are capped at `2N`.
pub fn truncated_event_rate(
    params: &ModelParams,
    state: &PopulationState,
    t: f64,
    kind: EventKind,
) -> f64 {
    let cap = params.cap();
    let capped = |v: u64| v.min(cap) as f64;
    match kind {
        EventKind::Birth => params.nu * capped(state.total()),
        EventKind::SusceptibleDeath => params.nu * capped(state.s),
        EventKind::Infection => {
            infection_pressure(params.beta_at(t), capped(state.s), state.i as f64, state.total())
        }
        EventKind::Recovery => params.gamma * capped(state.i),
        EventKind::InfectiousDeath => params.nu * capped(state.i),
        EventKind::RecoveredDeath => params.nu * capped(state.r),
    }
}

/// Apply the transition of `kind` to `state`.
pub fn apply_event(state: PopulationState, kind: EventKind) -> Result<PopulationState> {
    let underflow = || Error::Underflow { kind, state };
    let PopulationState { s, i, r } = state;
    let next = match kind {
        EventKind::Birth => PopulationState::new(s + 1, i, r),
        EventKind::SusceptibleDeath => PopulationState::new(s.checked_sub(1).ok_or_else(underflow)?, i, r),
        EventKind::Infection => PopulationState::new(s.checked_sub(1).ok_or_else(underflow)?, i + 1, r),
        EventKind::Recovery => PopulationState::new(s, i.checked_sub(1).ok_or_else(underflow)?, r + 1),
        EventKind::InfectiousDeath => PopulationState::new(s, i.checked_sub(1).ok_or_else(underflow)?, r),
        EventKind::RecoveredDeath => PopulationState::new(s, i, r.checked_sub(1).ok_or_else(underflow)?),
    };
    Ok(next)
}
