//! Original and truncated chains on one probability space.
//!
//! Every channel carries an indexed family of unit clocks, one per site
//! `x = 1, 2, ...`; a clock at site `x` moves the chain only if the relevant
//! count is at least `x` (the truncated chain additionally needs `x <= 2N`).
//! Infection clocks tick at β₀(1+β₁) and are further thinned by a uniform
//! `U <= β(t) I / (β₀(1+β₁) T)`. Aggregating over sites, proposals arrive at
//! `rate * max(count_original, count_truncated)` with `x` uniform on the
//! active sites. Both chains read the same proposal, site and uniform, so they
//! agree pathwise until the original total first exceeds `2N`.

use crate::error::{Error, Result};
use crate::model::{EventKind, ModelParams, PopulationState};
use crate::rng::RngStream;

use super::{select_channel, Recorder, SimConfig, Trajectory, Truncation};

/// Number of sites that can fire for each channel, in [`EventKind::ALL`] order.
#[inline]
fn active_sites(state: &PopulationState, cap: u64) -> [u64; 6] {
    let c = |v: u64| v.min(cap);
    [
        c(state.total()),
        c(state.s),
        c(state.s),
        c(state.i),
        c(state.i),
        c(state.r),
    ]
}

#[inline]
fn clock_rates(params: &ModelParams) -> [f64; 6] {
    [
        params.nu,
        params.nu,
        params.beta_max(),
        params.gamma,
        params.nu,
        params.nu,
    ]
}

#[inline]
fn accepts(
    params: &ModelParams,
    state: &PopulationState,
    sites: u64,
    site: u64,
    kind: EventKind,
    t: f64,
    u: f64,
) -> bool {
    if site > sites {
        return false;
    }
    if kind != EventKind::Infection {
        return true;
    }
    let total = state.total();
    total > 0 && u < params.thinning_ratio(t) * state.i as f64 / total as f64
}

/// Simulate the original and truncated chains from shared randomness.
///
/// Returns `(original, truncated)`. Both carry the original chain's τ_N.
pub fn simulate_coupled(
    config: &SimConfig,
    initial: PopulationState,
) -> Result<(Trajectory, Trajectory)> {
    config.validate()?;
    if config.truncation != Truncation::Coupled {
        return Err(Error::invalid("truncation", "simulate_coupled needs Truncation::Coupled"));
    }
    if initial.total() == 0 {
        return Err(Error::invalid("initial", "population must be nonempty"));
    }

    let params = &config.params;
    let clocks = clock_rates(params);
    let mut rng = RngStream::new(config.seed, config.stream);
    let mut original = Recorder::new(config, initial);
    let mut truncated = Recorder::new(config, initial);
    let mut t = 0.0;

    loop {
        let (sa, sb) = (original.state(), truncated.state());
        let sites_a = active_sites(&sa, u64::MAX);
        let sites_b = active_sites(&sb, params.cap());
        let mut rates = [0.0; 6];
        for c in 0..6 {
            rates[c] = clocks[c] * sites_a[c].max(sites_b[c]) as f64;
        }
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            break;
        }
        t += rng.exponential(total);
        if t > config.t_end {
            break;
        }
        let channel = select_channel(&rates, rng.uniform() * total);
        let kind = EventKind::ALL[channel];
        let site = rng.index_1based(sites_a[channel].max(sites_b[channel]));
        let u = if kind == EventKind::Infection { rng.uniform() } else { 0.0 };

        if accepts(params, &sa, sites_a[channel], site, kind, t, u) {
            original.fire(t, kind)?;
        } else {
            original.reject();
        }
        if accepts(params, &sb, sites_b[channel], site, kind, t, u) {
            truncated.fire(t, kind)?;
        } else {
            truncated.reject();
        }
    }

    let tau_n = original.tau_n();
    truncated.set_tau_n(tau_n);
    Ok((original.finish(), truncated.finish()))
}
