//! Coupling-law equivalence, gap-detector exhaustiveness, and label
//! bookkeeping for the separation machinery.

use dbarw_core::engine::{SimParams, Status};
use dbarw_core::lattice::{event_rate, total_rate, RateParams, SiteConfiguration};
use dbarw_core::rng::Rng;
use dbarw_core::separation::{
    check_separation, detect_i_gaps, simulate_labeled, single_step_law, Label,
    LabeledConfiguration, SeparationStatus,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::{BTreeSet, HashMap};

fn cfg(sites: &[i64]) -> SiteConfiguration {
    SiteConfiguration::new(sites.iter().copied()).unwrap()
}

/// Literal clause-by-clause evaluation of the i-gap definition.
fn gaps_by_definition(config: &SiteConfiguration) -> Vec<u64> {
    let Some(left) = config.leftmost() else {
        return Vec::new();
    };
    let width = config.width() as i64;
    let mut out = Vec::new();
    for i in 1..width {
        let occupied = |offset: i64| config.occupied(left + offset);
        if occupied(i - 1) && !occupied(i) && (occupied(i + 1) || occupied(i + 2)) {
            out.push(i as u64);
        }
    }
    out
}

/// Exhaustive agreement with the definition over every even configuration
/// of width at most 10.
#[test]
fn gap_detector_exhaustive() {
    let mut count = 0;
    for width in 2i64..=10 {
        let interior = (width - 2) as u32;
        for mask in 0u64..(1 << interior) {
            if mask.count_ones() % 2 != 0 {
                continue;
            }
            let mut sites = vec![0i64];
            for bit in 0..interior {
                if mask >> bit & 1 == 1 {
                    sites.push(bit as i64 + 1);
                }
            }
            sites.push(width - 1);
            let config = SiteConfiguration::new(sites).unwrap();
            assert_eq!(
                detect_i_gaps(&config),
                gaps_by_definition(&config),
                "{config}"
            );
            count += 1;
        }
    }
    assert_eq!(count, 256); // 2^(10-2)
}

fn random_labeled(rng: &mut Rng) -> LabeledConfiguration {
    loop {
        let n1 = 1 + rng.below(3) as usize;
        let n2 = 1 + rng.below(3) as usize;
        let mut g1 = BTreeSet::new();
        while g1.len() < 2 * n1 {
            g1.insert(rng.below(12) as i64 - 12);
        }
        let mut g2 = BTreeSet::new();
        while g2.len() < 2 * n2 {
            g2.insert(rng.below(12) as i64 + 2);
        }
        let g1 = SiteConfiguration::new(g1).unwrap();
        let g2 = SiteConfiguration::new(g2).unwrap();
        if let Ok(labeled) = LabeledConfiguration::new(g1, g2) {
            return labeled;
        }
    }
}

/// The coupled next-event law equals the merged configuration's rate ratios
/// exactly, over randomized fixtures.
#[test]
fn coupling_single_step_exact() {
    let mut rng = Rng::new(555);
    for fixture in 0..50 {
        let labeled = random_labeled(&mut rng);
        let p = 0.02 + 0.9 * rng.next_f64();
        let b = 0.1 + 6.0 * rng.next_f64();
        let params = RateParams::new(p, b).unwrap();
        let merged = labeled.merged();
        let total = total_rate(&merged, params);
        let law = single_step_law(&labeled, params);
        let mut mass = 0.0;
        for (_, ev, prob) in &law {
            let expect = event_rate(&merged, params, *ev) / total;
            assert!(
                (prob - expect).abs() < 1e-12,
                "fixture {fixture}: {ev:?} {prob} vs {expect}"
            );
            mass += prob;
        }
        assert!((mass - 1.0).abs() < 1e-12, "fixture {fixture}: mass {mass}");
    }
}

fn sequence_key(events: &[(i64, char)]) -> String {
    events.iter().map(|(s, k)| format!("{s}{k};")).collect()
}

/// Three-step event-sequence frequencies of the labeled and merged
/// processes agree at the 99% chi-square level.
#[test]
fn coupling_three_step_chi_square() {
    let labeled = LabeledConfiguration::new(cfg(&[0, 1]), cfg(&[4, 5])).unwrap();
    let merged = labeled.merged();
    let params = RateParams::new(0.6, 1.4).unwrap();
    let samples = 100_000u64;

    let mut counts_labeled: HashMap<String, u64> = HashMap::new();
    let mut counts_merged: HashMap<String, u64> = HashMap::new();
    for k in 0..samples {
        let sp = SimParams::new(dbarw_core::rng::mix_seed(11, k), 3, f64::INFINITY, 0).unwrap();
        let (traj, _) = simulate_labeled(&labeled, params, sp).unwrap();
        let key: Vec<(i64, char)> = traj
            .records
            .iter()
            .map(|r| (r.event.site, r.event.kind.tag()))
            .collect();
        *counts_labeled.entry(sequence_key(&key)).or_insert(0) += 1;

        let sp = SimParams::new(dbarw_core::rng::mix_seed(13, k), 3, f64::INFINITY, 0).unwrap();
        let traj = dbarw_core::engine::simulate(&merged, params, sp).unwrap();
        let key: Vec<(i64, char)> = traj
            .records
            .iter()
            .map(|r| (r.event.site, r.event.kind.tag()))
            .collect();
        *counts_merged.entry(sequence_key(&key)).or_insert(0) += 1;
    }

    // two-sample chi-square with rare sequences pooled
    let keys: BTreeSet<&String> = counts_labeled.keys().chain(counts_merged.keys()).collect();
    let mut stat = 0.0;
    let mut pooled = [0.0f64; 2];
    let mut cells = 0usize;
    for key in keys {
        let a = *counts_labeled.get(key).unwrap_or(&0) as f64;
        let b = *counts_merged.get(key).unwrap_or(&0) as f64;
        if a + b < 20.0 {
            pooled[0] += a;
            pooled[1] += b;
            continue;
        }
        stat += (a - b).powi(2) / (a + b);
        cells += 1;
    }
    if pooled[0] + pooled[1] > 0.0 {
        stat += (pooled[0] - pooled[1]).powi(2) / (pooled[0] + pooled[1]);
        cells += 1;
    }
    let crit = ChiSquared::new((cells - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    assert!(
        stat < crit,
        "chi-square {stat:.1} exceeds {crit:.1} over {cells} cells"
    );
}

/// Labels partition the particles and each group's parity is conserved
/// until the merge.
#[test]
fn label_conservation() {
    let labeled = LabeledConfiguration::new(cfg(&[0, 1, 3, 4]), cfg(&[9, 10])).unwrap();
    let params = RateParams::new(0.4, 2.0).unwrap();
    for seed in 0..50u64 {
        let sp = SimParams::new(seed, 400, f64::INFINITY, 0).unwrap();
        let (traj, _) = simulate_labeled(&labeled, params, sp).unwrap();
        let mut groups = [
            traj.initial
                .group1()
                .sites()
                .iter()
                .copied()
                .collect::<BTreeSet<i64>>(),
            traj.initial
                .group2()
                .sites()
                .iter()
                .copied()
                .collect::<BTreeSet<i64>>(),
        ];
        for rec in &traj.records {
            let a = match rec.label {
                Label::Group1 => 0,
                Label::Group2 => 1,
                Label::Merged => break,
            };
            // the acting particle belongs to the labeled group and to it only
            assert!(groups[a].contains(&rec.event.site));
            assert!(!groups[1 - a].contains(&rec.event.site));
            let toggle = |set: &mut BTreeSet<i64>, s: i64| {
                if !set.remove(&s) {
                    set.insert(s);
                }
            };
            match rec.event.kind {
                dbarw_core::lattice::EventKind::JumpRight => {
                    toggle(&mut groups[a], rec.event.site);
                    toggle(&mut groups[a], rec.event.site + 1);
                }
                dbarw_core::lattice::EventKind::JumpLeft => {
                    toggle(&mut groups[a], rec.event.site);
                    toggle(&mut groups[a], rec.event.site - 1);
                }
                dbarw_core::lattice::EventKind::Branch => {
                    toggle(&mut groups[a], rec.event.site - 1);
                    toggle(&mut groups[a], rec.event.site + 1);
                }
            }
            assert_eq!(groups[0].len() % 2, 0, "group 1 parity");
            assert_eq!(groups[1].len() % 2, 0, "group 2 parity");
            assert!(
                groups[0].is_disjoint(&groups[1]),
                "labels partition the particles"
            );
        }
    }
}

/// A Met verdict never weakens to Separated when the same realization runs
/// under a longer horizon.
#[test]
fn met_is_monotone_in_horizon() {
    let labeled = LabeledConfiguration::new(cfg(&[0, 1]), cfg(&[4, 5])).unwrap();
    let params = RateParams::new(0.5, 1.5).unwrap();
    for seed in 0..150u64 {
        let short = SimParams::new(seed, 40, f64::INFINITY, 0).unwrap();
        let long = SimParams::new(seed, 4_000, f64::INFINITY, 0).unwrap();
        let (ts, vs) = simulate_labeled(&labeled, params, short).unwrap();
        let (tl, vl) = simulate_labeled(&labeled, params, long).unwrap();
        if vs.status == SeparationStatus::Met {
            assert_eq!(vl.status, SeparationStatus::Met);
            assert_eq!(vs.first_meeting_time, vl.first_meeting_time);
            assert_eq!(check_separation(&ts).status, SeparationStatus::Met);
            assert_eq!(check_separation(&tl).status, SeparationStatus::Met);
        }
        if vs.status == SeparationStatus::Separated {
            assert_eq!(ts.status, Status::Extinct);
            assert_eq!(vl.status, SeparationStatus::Separated);
        }
    }
}
