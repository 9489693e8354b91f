use crate::error::{Error, Result};
use crate::model::{apply_event, PopulationState};

use super::{grid_len, StopTimes, Trajectory};

/// Path values at `t = 0, dt, 2 dt, ...` up to the largest multiple of `dt`
/// not beyond the horizon. An event exactly at a grid time is included.
pub fn sample_grid(traj: &Trajectory, dt: f64) -> Result<Vec<(f64, PopulationState)>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    let events = traj.events.as_ref().ok_or(Error::MissingEventLog)?;
    let len = grid_len(traj.t_end, dt);
    let mut out = Vec::with_capacity(len);
    let mut state = traj.initial;
    let mut next = events.iter().peekable();
    for k in 0..len {
        let g = k as f64 * dt;
        while let Some(ev) = next.next_if(|ev| ev.t <= g) {
            state = apply_event(state, ev.kind)?;
        }
        out.push((g, state));
    }
    Ok(out)
}

/// First times the total exceeds `2N` and leaves `[N(1-ε), N(1+ε)]`.
pub fn detect_stop_times(traj: &Trajectory, epsilon: f64) -> Result<StopTimes> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    let events = traj.events.as_ref().ok_or(Error::MissingEventLog)?;
    let n = traj.n_scale as f64;
    let mut stop = StopTimes::default();
    let check = |t: f64, state: &PopulationState, stop: &mut StopTimes| {
        let total = state.total() as f64;
        if stop.tau_n.is_none() && total > 2.0 * n {
            stop.tau_n = Some(t);
        }
        if stop.tau_n_eps.is_none() && (total - n).abs() > epsilon * n {
            stop.tau_n_eps = Some(t);
        }
    };
    let mut state = traj.initial;
    check(0.0, &state, &mut stop);
    for ev in events {
        if stop.tau_n.is_some() && stop.tau_n_eps.is_some() {
            break;
        }
        state = apply_event(state, ev.kind)?;
        check(ev.t, &state, &mut stop);
    }
    Ok(stop)
}
