//! Statistical and bookkeeping checks for the event engine: sampling
//! exactness, localized rate maintenance, and embedded-chain consistency.

use dbarw_core::engine::{drive, extract_width_chain, simulate, SimParams, Simulation, Status};
use dbarw_core::lattice::{
    enabled_events, event_rate, total_rate, EventKind, LocalEvent, RateParams, SiteConfiguration,
};
use dbarw_core::rng::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::HashMap;

fn cfg(sites: &[i64]) -> SiteConfiguration {
    SiteConfiguration::new(sites.iter().copied()).unwrap()
}

fn chi_square_crit(dof: usize, level: f64) -> f64 {
    ChiSquared::new(dof as f64).unwrap().inverse_cdf(level)
}

/// Empirical single-event frequencies against `rate / total` at the 99%
/// chi-square level, through the sum-tree sampler.
#[test]
fn sampler_exactness_chi_square() {
    let config = cfg(&[0, 1, 3, 7]);
    let params = RateParams::new(0.37, 2.2).unwrap();
    let mut sim = Simulation::new(&config, params);
    let mut rng = Rng::new(1234);

    let n = 100_000usize;
    let mut counts: HashMap<LocalEvent, u64> = HashMap::new();
    for _ in 0..n {
        let ev = sim.sample_event(&mut rng).unwrap();
        *counts.entry(ev).or_insert(0) += 1;
    }

    let events = enabled_events(&config, params);
    let total = total_rate(&config, params);
    let mut stat = 0.0;
    for (ev, rate) in &events {
        let expected = n as f64 * rate / total;
        let observed = *counts.get(ev).unwrap_or(&0) as f64;
        stat += (observed - expected).powi(2) / expected;
    }
    let crit = chi_square_crit(events.len() - 1, 0.99);
    assert!(stat < crit, "chi-square {stat:.2} exceeds {crit:.2}");
}

/// The linear-scan single-step sampler obeys the same law.
#[test]
fn step_exactness_chi_square() {
    let config = cfg(&[0, 4]);
    let params = RateParams::new(0.5, 2.0).unwrap();
    let mut rng = Rng::new(4321);
    let n = 100_000usize;
    let mut counts: HashMap<LocalEvent, u64> = HashMap::new();
    for _ in 0..n {
        let (_, ev) = dbarw_core::engine::step(&config, params, &mut rng).unwrap();
        *counts.entry(ev).or_insert(0) += 1;
    }
    let events = enabled_events(&config, params);
    let total = total_rate(&config, params);
    let mut stat = 0.0;
    for (ev, rate) in &events {
        let expected = n as f64 * rate / total;
        let observed = *counts.get(ev).unwrap_or(&0) as f64;
        stat += (observed - expected).powi(2) / expected;
    }
    // branch at an isolated site: probability b / (4 + 2b) = 0.25 each
    let crit = chi_square_crit(events.len() - 1, 0.99);
    assert!(stat < crit, "chi-square {stat:.2} exceeds {crit:.2}");
}

/// Mean holding time of the exponential race stays within four standard
/// errors of `1 / total_rate`.
#[test]
fn holding_time_mean() {
    let config = cfg(&[0, 1]);
    let params = RateParams::new(0.25, 4.0).unwrap();
    let total = total_rate(&config, params);
    let n = 100_000usize;
    let mut rng = Rng::new(99);
    let mut sum = 0.0;
    for _ in 0..n {
        let mut sim = Simulation::new(&config, params);
        let (holding, _) = sim.advance(&mut rng).unwrap();
        sum += holding;
    }
    let mean = sum / n as f64;
    let expect = 1.0 / total;
    let se = expect / (n as f64).sqrt();
    assert!((mean - expect).abs() < 4.0 * se, "mean {mean} vs {expect}");
}

/// Fuzz: after arbitrary event sequences, the incrementally maintained
/// per-particle rates equal a full recomputation exactly, and the tree
/// total matches the fresh sum.
#[test]
fn localized_updates_match_full_recompute() {
    for seed in 0..20u64 {
        let mut rng = Rng::new(seed);
        let p = 0.05 + 0.9 * rng.next_f64();
        let b = 0.1 + 8.0 * rng.next_f64();
        let params = RateParams::new(p, b).unwrap();
        let initial = cfg(&[-6, -2, 0, 1, 5, 9]);
        let mut sim = Simulation::new(&initial, params);
        for step in 0..400 {
            if sim.advance(&mut rng).is_none() {
                break;
            }
            if step % 10 != 0 {
                continue;
            }
            let config = sim.config();
            for &site in config.sites() {
                let stored = sim.stored_rates(site).unwrap();
                for (kind, got) in EventKind::ALL.into_iter().zip(stored) {
                    let fresh = event_rate(&config, params, LocalEvent::new(site, kind));
                    assert_eq!(got, fresh, "seed {seed} step {step} site {site} {kind:?}");
                }
            }
            let fresh_total = total_rate(&config, params);
            assert!(
                (sim.total_rate() - fresh_total).abs() <= 1e-9 * fresh_total.max(1.0),
                "seed {seed} step {step}: {} vs {fresh_total}",
                sim.total_rate()
            );
        }
    }
}

/// Partial sums of the embedded chain reproduce the widths, increments stay
/// in the three-point range strictly before the cutoff, and the cutoff entry
/// is the first violation.
#[test]
fn embedded_chain_consistency() {
    for seed in 0..60u64 {
        let params = RateParams::new(0.6, 1.8).unwrap();
        let sp = SimParams::new(seed, 3_000, f64::INFINITY, 0).unwrap();
        let initial = cfg(&[0, 1, 4, 5]);
        let traj = simulate(&initial, params, sp).unwrap();
        let chain = extract_width_chain(&traj);
        let mut w = initial.width() as i64;
        for (k, entry) in chain.entries.iter().enumerate() {
            w += entry.v;
            assert_eq!(entry.w as i64, w, "partial sums reproduce widths");
            let is_cutoff = chain.cutoff_n == Some(k + 1);
            if is_cutoff {
                assert!(entry.w == 0 || entry.v <= -3);
                assert_eq!(k + 1, chain.entries.len(), "nothing after the cutoff");
            } else {
                assert!(
                    matches!(entry.v, -2 | -1 | 1),
                    "pre-cutoff increment {} out of range",
                    entry.v
                );
            }
        }
        if chain.cutoff_n.is_none() {
            assert!(chain.entries.iter().all(|e| matches!(e.v, -2 | -1 | 1)));
        }
    }
}

/// The recording and non-recording loops classify identically.
#[test]
fn drive_and_simulate_agree() {
    let params = RateParams::new(0.5, 2.0).unwrap();
    let initial = cfg(&[0, 1]);
    for seed in 0..100u64 {
        let sp = SimParams::new(seed, 300, f64::INFINITY, 10).unwrap();
        let traj = simulate(&initial, params, sp).unwrap();
        let (status, sim) = drive(&initial, params, sp, |_, _, _| {}).unwrap();
        assert_eq!(traj.status, status);
        assert_eq!(traj.final_config, sim.config());
        assert_eq!(traj.records.len() as u64, sim.events());
    }
}

/// Time caps leave the trajectory short of the horizon; event caps hit the
/// budget exactly.
#[test]
fn cap_semantics() {
    let params = RateParams::new(0.5, 2.0).unwrap();
    let initial = cfg(&[0, 1]);
    let sp = SimParams::new(7, 1_000_000, 0.5, 0).unwrap();
    let traj = simulate(&initial, params, sp).unwrap();
    if traj.status == Status::TimeCap {
        assert!(traj.records.iter().all(|r| r.time <= 0.5));
    }
    let sp = SimParams::new(7, 25, f64::INFINITY, 0).unwrap();
    let traj = simulate(&initial, params, sp).unwrap();
    if traj.status == Status::EventCap {
        assert_eq!(traj.records.len(), 25);
    }
}
