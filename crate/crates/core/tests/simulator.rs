mod common;

use epiflux::model::{event_rate, truncated_event_rate, EventKind};
use epiflux::sim::{detect_stop_times, sample_grid, Trajectory};
use epiflux::{apply_event, simulate, Error, ModelParams, PopulationState, RecordMode, SimConfig, Truncation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{mean_and_se, total_chain_exits};

type RateFn = fn(&ModelParams, &PopulationState, f64, EventKind) -> f64;

/// `∫₀ᵗ Σ_k rate_k` along the path, integrated exactly between events.
fn compensator(params: &ModelParams, traj: &Trajectory, rate: RateFn) -> f64 {
    let beta_part = |state: &PopulationState, a: f64, b: f64| {
        let contact = rate(params, state, 0.0, EventKind::Infection) / params.beta_at(0.0);
        contact * (params.beta_antiderivative(b) - params.beta_antiderivative(a))
    };
    let flat = |state: &PopulationState| {
        EventKind::ALL
            .iter()
            .filter(|k| **k != EventKind::Infection)
            .map(|k| rate(params, state, 0.0, *k))
            .sum::<f64>()
    };
    let mut state = traj.initial;
    let mut last = 0.0;
    let mut acc = 0.0;
    for ev in traj.events.as_ref().unwrap() {
        acc += flat(&state) * (ev.t - last) + beta_part(&state, last, ev.t);
        state = apply_event(state, ev.kind).unwrap();
        last = ev.t;
    }
    acc + flat(&state) * (traj.t_end - last) + beta_part(&state, last, traj.t_end)
}

#[test]
fn event_count_matches_its_compensator() {
    let params = ModelParams::seasonal_default(1000);
    let initial = PopulationState::from_fractions(1000, [0.92, 0.08, 0.0]).unwrap();
    let diffs: Vec<f64> = (0..2000)
        .map(|run| {
            let traj = simulate(&SimConfig::new(params, 1.0, 12).with_stream(run), initial).unwrap();
            traj.event_count as f64 - compensator(&params, &traj, event_rate)
        })
        .collect();
    let (mean, se) = mean_and_se(&diffs);
    assert!(mean.abs() <= 5.0 * se, "mean(count - compensator) = {mean}, se = {se}");
}

#[test]
fn thinning_ratio_stays_in_band() {
    for beta1 in [0.0, 0.2, 0.4, 0.9] {
        let p = ModelParams::new(1.0, 10.0, 20.0, beta1, 10).unwrap();
        let lo = (1.0 - beta1) / (1.0 + beta1);
        for k in 0..10_000 {
            let r = p.thinning_ratio(k as f64 * 7.3e-4);
            assert!(r >= lo - 1e-15 && r <= 1.0 + 1e-15, "beta1 {beta1}: {r}");
        }
    }
}

#[test]
fn event_times_increase_and_replay_reproduces_grid() {
    let params = ModelParams::seasonal_default(2000);
    let initial = PopulationState::new(1840, 160, 0);
    let traj = simulate(&SimConfig::new(params, 2.0, 3), initial).unwrap();
    let events = traj.events.as_ref().unwrap();
    assert!(events.len() > 10_000);
    assert!(events.windows(2).all(|w| w[0].t < w[1].t));
    assert!(events.iter().all(|e| e.t > 0.0 && e.t <= 2.0));
    let mut state = initial;
    for ev in events {
        state = apply_event(state, ev.kind).unwrap();
    }
    assert_eq!(state, traj.final_state);
    let grid = sample_grid(&traj, 0.01).unwrap();
    let inline = simulate(
        &SimConfig::new(params, 2.0, 3).with_record_mode(RecordMode::SampledGrid(0.01)),
        initial,
    )
    .unwrap();
    let inline: Vec<_> = inline.grid.unwrap().into_iter().map(|p| (p.t, p.state)).collect();
    assert_eq!(grid, inline);
}

#[test]
fn total_rarely_leaves_five_percent_band() {
    // independent chain for the total only: births and deaths at ν T each
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let exits = (0..1000)
        .filter(|_| total_chain_exits(1_000_000, 1.0, 0.05, 1.0, &mut rng))
        .count();
    assert!((exits as f64) / 1000.0 < 0.01, "{exits} exits");

    // the full simulator's stop-time tracking on a smaller population
    let n = 100_000;
    let params = ModelParams::seasonal_default(n);
    let initial = PopulationState::from_fractions(n, [0.92, 0.08, 0.0]).unwrap();
    for run in 0..100 {
        let cfg = SimConfig::new(params, 1.0, 21)
            .with_stream(run)
            .with_record_mode(RecordMode::EndpointOnly)
            .with_epsilon(0.05);
        let traj = simulate(&cfg, initial).unwrap();
        assert_eq!(traj.stop_times.tau_n_eps, None, "run {run}");
        assert_eq!(traj.stop_times.tau_n, None, "run {run}");
    }
}

#[test]
fn small_population_stop_times_are_nested() {
    let params = ModelParams::new(4.0, 10.0, 20.0, 0.4, 30).unwrap();
    let mut hits = 0;
    for seed in 0..300 {
        let traj = simulate(&SimConfig::new(params, 2.0, seed), PopulationState::new(27, 3, 0)).unwrap();
        let narrow = detect_stop_times(&traj, 0.05).unwrap();
        let wide = detect_stop_times(&traj, 0.5).unwrap();
        if let Some(w) = wide.tau_n_eps {
            hits += 1;
            assert!(narrow.tau_n_eps.unwrap() <= w);
        }
        if let Some(tau) = narrow.tau_n {
            assert!(narrow.tau_n_eps.unwrap() <= tau);
            assert!(wide.tau_n_eps.unwrap() <= tau);
        }
    }
    assert!(hits > 0);
}

#[test]
fn truncated_event_count_matches_capped_compensator() {
    // small N and fast turnover so the caps bind on most paths
    let n = 10;
    let params = ModelParams::new(6.0, 10.0, 20.0, 0.4, n).unwrap();
    let mut capped_paths = 0;
    let diffs: Vec<f64> = (0..3000)
        .map(|run| {
            let cfg = SimConfig::new(params, 2.0, 13)
                .with_stream(run)
                .with_truncation(Truncation::Truncated);
            let traj = simulate(&cfg, PopulationState::new(9, 1, 0)).unwrap();
            if traj.stop_times.tau_n.is_some() {
                capped_paths += 1;
            }
            traj.event_count as f64 - compensator(&params, &traj, truncated_event_rate)
        })
        .collect();
    assert!(capped_paths > 300, "{capped_paths}");
    let (mean, se) = mean_and_se(&diffs);
    assert!(mean.abs() <= 5.0 * se, "mean(count - compensator) = {mean}, se = {se}");
}

#[test]
fn budget_guard_reports_time() {
    let params = ModelParams::seasonal_default(10_000);
    let cfg = SimConfig::new(params, 1.0, 1).with_event_budget(1000);
    match simulate(&cfg, PopulationState::new(9200, 800, 0)) {
        Err(Error::BudgetExceeded { budget, t }) => {
            assert_eq!(budget, 1000);
            assert!(t > 0.0 && t < 1.0);
        }
        other => panic!("{other:?}"),
    }
}
