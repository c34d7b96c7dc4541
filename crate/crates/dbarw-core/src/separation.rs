//! Gap detection and the two-subprocess coupling behind separation times.
//!
//! An `i`-gap is a vacancy at offset `i` from the leftmost particle whose
//! left neighbor is occupied and whose right side is occupied within two
//! sites. A gap splits the population into two labeled groups; a separation
//! time is a moment after which the two groups never become adjacent again.
//!
//! The coupled process evolves the groups as independent walks realized on
//! one clock: each step picks the acting subprocess with probability
//! proportional to its total rate and executes that subprocess's own next
//! event. While the groups are separated by at least one vacancy every
//! particle sees the same neighborhood in its own group as in the merged
//! configuration, so the coupled law equals the merged law exactly. All
//! moves are nearest-neighbor, so the groups cannot interleave without
//! first becoming adjacent; adjacency detection is therefore a complete
//! meeting detector. On meeting the subprocess clocks are abandoned and the
//! merged configuration continues with fresh randomness, which the direct
//! method provides for free since every step draws fresh.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::engine::{EngineError, SimParams, Simulation, Status, Trajectory};
use crate::lattice::{EventKind, LocalEvent, RateParams, SiteConfiguration};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeparationError {
    /// Gap operations need a nonempty configuration.
    EmptyConfiguration,
    /// The requested offset is not an i-gap of the configuration.
    NotAGap(u64),
    /// Splitting produced a side with an odd particle count.
    OddSides,
    /// The two groups overlap or are not separated by a vacancy.
    NotSeparated,
    /// A group is empty at construction.
    EmptyGroup,
}

impl fmt::Display for SeparationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyConfiguration => write!(f, "empty configuration has no gaps"),
            Self::NotAGap(i) => write!(f, "offset {i} is not an i-gap"),
            Self::OddSides => write!(f, "both sides of the gap must hold even particle counts"),
            Self::NotSeparated => {
                write!(
                    f,
                    "groups must be disjoint and separated by at least one vacancy"
                )
            }
            Self::EmptyGroup => write!(f, "both groups must be nonempty"),
        }
    }
}

impl core::error::Error for SeparationError {}

/// Absolute lattice positions of gaps: vacancies directly right of a
/// particle with another particle one or two sites further right.
pub fn absolute_gap_positions(config: &SiteConfiguration) -> Vec<i64> {
    let sites = config.sites();
    let mut out = Vec::new();
    for w in sites.windows(2) {
        let spacing = w[1] - w[0];
        if spacing == 2 || spacing == 3 {
            out.push(w[0] + 1);
        }
    }
    out
}

/// Offsets `i >= 1` from the leftmost particle at which an i-gap occurs:
/// site `left+i-1` occupied, `left+i` vacant, and `left+i+1` or `left+i+2`
/// occupied. Empty configurations have none.
pub fn detect_i_gaps(config: &SiteConfiguration) -> Vec<u64> {
    match config.leftmost() {
        Some(left) => absolute_gap_positions(config)
            .into_iter()
            .map(|g| (g - left) as u64)
            .collect(),
        None => Vec::new(),
    }
}

/// A gap produced by a transition: the offset from the then-leftmost
/// particle and the time of the producing event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEvent {
    pub offset: u64,
    pub time: f64,
}

/// Gap positions present after a transition but not before it, in absolute
/// coordinates.
fn produced_gaps(before: &SiteConfiguration, after: &SiteConfiguration) -> Vec<i64> {
    let old = absolute_gap_positions(before);
    absolute_gap_positions(after)
        .into_iter()
        .filter(|g| !old.contains(g))
        .collect()
}

/// Every gap-producing transition of a trajectory, with offsets taken from
/// the post-transition leftmost particle.
pub fn gap_events(traj: &Trajectory) -> Vec<GapEvent> {
    let configs = traj.replay_configs();
    let mut out = Vec::new();
    for (rec, pair) in traj.records.iter().zip(configs.windows(2)) {
        let after = &pair[1];
        let Some(left) = after.leftmost() else {
            continue;
        };
        for g in produced_gaps(&pair[0], after) {
            out.push(GapEvent {
                offset: (g - left) as u64,
                time: rec.time,
            });
        }
    }
    out
}

/// Two disjoint particle groups separated by at least one vacancy.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledConfiguration {
    group1: SiteConfiguration,
    group2: SiteConfiguration,
}

impl LabeledConfiguration {
    /// Validates that both groups are nonempty and `group1` ends at least
    /// two sites left of where `group2` begins.
    pub fn new(
        group1: SiteConfiguration,
        group2: SiteConfiguration,
    ) -> Result<Self, SeparationError> {
        let (Some(r1), Some(l2)) = (group1.rightmost(), group2.leftmost()) else {
            return Err(SeparationError::EmptyGroup);
        };
        if r1 + 1 >= l2 {
            return Err(SeparationError::NotSeparated);
        }
        Ok(Self { group1, group2 })
    }

    pub fn group1(&self) -> &SiteConfiguration {
        &self.group1
    }

    pub fn group2(&self) -> &SiteConfiguration {
        &self.group2
    }

    /// The union configuration the coupling realizes.
    pub fn merged(&self) -> SiteConfiguration {
        SiteConfiguration::new(
            self.group1
                .sites()
                .iter()
                .chain(self.group2.sites())
                .copied(),
        )
        .expect("disjoint even groups merge to an even configuration")
    }
}

/// Splits at the i-gap with offset `i`: group 1 takes the particles at
/// offsets `<= i`, group 2 the rest. Rejects offsets that are not gaps and
/// splits with odd particle counts on either side.
pub fn split_at_gap(
    config: &SiteConfiguration,
    i: u64,
) -> Result<LabeledConfiguration, SeparationError> {
    let left = config
        .leftmost()
        .ok_or(SeparationError::EmptyConfiguration)?;
    if !detect_i_gaps(config).contains(&i) {
        return Err(SeparationError::NotAGap(i));
    }
    let cut = left + i as i64;
    let (g1, g2): (Vec<i64>, Vec<i64>) = config.sites().iter().partition(|&&s| s <= cut);
    let group1 = SiteConfiguration::new(g1).map_err(|_| SeparationError::OddSides)?;
    let group2 = SiteConfiguration::new(g2).map_err(|_| SeparationError::OddSides)?;
    LabeledConfiguration::new(group1, group2)
}

/// Which subprocess an executed event belonged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Group1,
    Group2,
    /// Executed after the groups met and the process continued merged.
    Merged,
}

impl Label {
    /// Numeric tag for the dump format: 1, 2, or 0 once merged.
    pub fn tag(&self) -> u8 {
        match self {
            Label::Group1 => 1,
            Label::Group2 => 2,
            Label::Merged => 0,
        }
    }
}

/// One executed event of the coupled process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledRecord {
    pub time: f64,
    pub event: LocalEvent,
    pub label: Label,
    /// Width of the union of both groups after the event.
    pub width_after: u64,
}

/// Full record of a coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrajectory {
    pub initial: LabeledConfiguration,
    pub records: Vec<LabeledRecord>,
    pub status: Status,
    pub final_config: SiteConfiguration,
    pub meeting_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationStatus {
    /// Both groups died out without ever becoming adjacent.
    Separated,
    /// The groups became adjacent.
    Met,
    /// A budget cap ended the run before either outcome.
    Censored,
}

/// Verdict on whether the initial gap permanently separated the groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationVerdict {
    pub status: SeparationStatus,
    pub first_meeting_time: Option<f64>,
}

fn union_width(a: &Simulation, b: &Simulation) -> u64 {
    let left = match (a.leftmost(), b.leftmost()) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    };
    let right = match (a.rightmost(), b.rightmost()) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    };
    match (left, right) {
        (Some(l), Some(r)) => (r - l + 1) as u64,
        _ => 0,
    }
}

fn toggled_sites(ev: LocalEvent) -> [i64; 2] {
    match ev.kind {
        EventKind::JumpRight => [ev.site, ev.site + 1],
        EventKind::JumpLeft => [ev.site - 1, ev.site],
        EventKind::Branch => [ev.site - 1, ev.site + 1],
    }
}

/// The exact next-event distribution of the coupled process: subprocess
/// selection probability times the within-subprocess event probability,
/// which collapses to `own-group rate / (q1 + q2)`.
pub fn single_step_law(
    labeled: &LabeledConfiguration,
    params: RateParams,
) -> Vec<(Label, LocalEvent, f64)> {
    let sims = [
        Simulation::new(labeled.group1(), params),
        Simulation::new(labeled.group2(), params),
    ];
    let total = sims[0].total_rate() + sims[1].total_rate();
    let mut out = Vec::new();
    for (sim, label) in sims.iter().zip([Label::Group1, Label::Group2]) {
        for &site in sim.config().sites() {
            let rates = sim.stored_rates(site).expect("site occupied");
            for (kind, rate) in [EventKind::JumpRight, EventKind::JumpLeft, EventKind::Branch]
                .into_iter()
                .zip(rates)
            {
                out.push((label, LocalEvent::new(site, kind), rate / total));
            }
        }
    }
    out
}

/// Evolves the coupled process and reports whether the groups stayed apart.
///
/// Pre-meeting, each step selects the acting subprocess with probability
/// `q_a / (q1 + q2)` and executes that subprocess's own next event; offspring
/// inherit the brancher's label. The first cross-group adjacency switches the
/// run to a single merged configuration for the remaining budget. Stop
/// conditions and their semantics match [`crate::engine::drive`].
pub fn simulate_labeled(
    labeled: &LabeledConfiguration,
    rate_params: RateParams,
    sim_params: SimParams,
) -> Result<(LabeledTrajectory, SeparationVerdict), EngineError> {
    sim_params.validate()?;
    let mut rng = Rng::new(sim_params.seed);
    let mut sims = [
        Simulation::new(labeled.group1(), rate_params),
        Simulation::new(labeled.group2(), rate_params),
    ];
    let mut records = Vec::new();
    let mut time = 0.0_f64;
    let mut events = 0u64;
    let mut meeting_time = None;

    let mut status = None;
    while status.is_none() {
        let q = [sims[0].total_rate(), sims[1].total_rate()];
        let total = q[0] + q[1];
        if sims[0].is_empty() && sims[1].is_empty() {
            status = Some(Status::Extinct);
            break;
        }
        if events >= sim_params.max_events {
            status = Some(Status::EventCap);
            break;
        }
        let u = rng.next_f64();
        let a = if sims[1].is_empty() {
            0
        } else if sims[0].is_empty() {
            1
        } else if u * total < q[0] {
            0
        } else {
            1
        };
        let ev = sims[a]
            .sample_event(&mut rng)
            .expect("selected subprocess is nonempty");
        let holding = rng.exp(total);
        if time + holding > sim_params.max_time {
            status = Some(Status::TimeCap);
            break;
        }
        sims[a]
            .apply(ev)
            .expect("sampled events act on occupied sites");
        time += holding;
        events += 1;
        let width_after = union_width(&sims[0], &sims[1]);
        let label = if a == 0 { Label::Group1 } else { Label::Group2 };
        records.push(LabeledRecord {
            time,
            event: ev,
            label,
            width_after,
        });

        let other = &sims[1 - a];
        let mut met = false;
        for t in toggled_sites(ev) {
            if sims[a].occupied(t)
                && (other.occupied(t - 1) || other.occupied(t) || other.occupied(t + 1))
            {
                met = true;
            }
        }
        if met {
            meeting_time = Some(time);
            break;
        }
        if sims[0].is_empty() && sims[1].is_empty() {
            status = Some(Status::Extinct);
            break;
        }
        if sim_params.width_cap > 0 && width_after >= sim_params.width_cap {
            status = Some(Status::WidthCap);
            break;
        }
    }

    let final_config;
    let status = match status {
        Some(s) => {
            final_config = SiteConfiguration::new(
                sims[0]
                    .config()
                    .sites()
                    .iter()
                    .chain(sims[1].config().sites())
                    .copied(),
            )
            .expect("groups stay disjoint while separated");
            s
        }
        None => {
            // meeting: continue merged with fresh randomness
            let merged = SiteConfiguration::new(
                sims[0]
                    .config()
                    .sites()
                    .iter()
                    .chain(sims[1].config().sites())
                    .copied(),
            )
            .expect("groups are adjacent but still disjoint at the meeting");
            let mut sim = Simulation::new(&merged, rate_params);
            let s = loop {
                if sim.is_empty() {
                    break Status::Extinct;
                }
                if events >= sim_params.max_events {
                    break Status::EventCap;
                }
                let total = sim.total_rate();
                let ev = sim.sample_event(&mut rng).expect("nonempty configuration");
                let holding = rng.exp(total);
                if time + holding > sim_params.max_time {
                    break Status::TimeCap;
                }
                sim.apply(ev).expect("sampled events act on occupied sites");
                time += holding;
                events += 1;
                let width_after = sim.width();
                records.push(LabeledRecord {
                    time,
                    event: ev,
                    label: Label::Merged,
                    width_after,
                });
                if sim.is_empty() {
                    break Status::Extinct;
                }
                if sim_params.width_cap > 0 && width_after >= sim_params.width_cap {
                    break Status::WidthCap;
                }
            };
            final_config = sim.config();
            s
        }
    };

    let trajectory = LabeledTrajectory {
        initial: labeled.clone(),
        records,
        status,
        final_config,
        meeting_time,
    };
    let verdict = verdict_from(meeting_time, status);
    Ok((trajectory, verdict))
}

fn verdict_from(meeting_time: Option<f64>, status: Status) -> SeparationVerdict {
    match meeting_time {
        Some(t) => SeparationVerdict {
            status: SeparationStatus::Met,
            first_meeting_time: Some(t),
        },
        None => SeparationVerdict {
            status: if status == Status::Extinct {
                SeparationStatus::Separated
            } else {
                SeparationStatus::Censored
            },
            first_meeting_time: None,
        },
    }
}

fn apply_to_set(set: &mut BTreeSet<i64>, ev: LocalEvent) {
    let toggle = |set: &mut BTreeSet<i64>, s: i64| {
        if !set.remove(&s) {
            set.insert(s);
        }
    };
    match ev.kind {
        EventKind::JumpRight => {
            toggle(set, ev.site);
            toggle(set, ev.site + 1);
        }
        EventKind::JumpLeft => {
            toggle(set, ev.site);
            toggle(set, ev.site - 1);
        }
        EventKind::Branch => {
            toggle(set, ev.site - 1);
            toggle(set, ev.site + 1);
        }
    }
}

fn sets_adjacent(a: &BTreeSet<i64>, b: &BTreeSet<i64>) -> bool {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .iter()
        .any(|&s| large.contains(&(s - 1)) || large.contains(&s) || large.contains(&(s + 1)))
}

/// Independent verdict derived by replaying a labeled trajectory.
///
/// Rebuilds both group site sets from the initial split, applies each
/// pre-merge record to its group, and scans for the first cross-group
/// adjacency. Separated is only claimed when the run ended extinct without
/// ever meeting; runs cut off by a budget cap stay Censored.
pub fn check_separation(traj: &LabeledTrajectory) -> SeparationVerdict {
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
    if sets_adjacent(&groups[0], &groups[1]) {
        return SeparationVerdict {
            status: SeparationStatus::Met,
            first_meeting_time: Some(0.0),
        };
    }
    for rec in &traj.records {
        let a = match rec.label {
            Label::Group1 => 0,
            Label::Group2 => 1,
            Label::Merged => break,
        };
        apply_to_set(&mut groups[a], rec.event);
        if sets_adjacent(&groups[0], &groups[1]) {
            return SeparationVerdict {
                status: SeparationStatus::Met,
                first_meeting_time: Some(rec.time),
            };
        }
    }
    verdict_from(None, traj.status)
}

/// How to count separation candidates that outlive the recorded horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HorizonPolicy {
    /// Count only candidates certified by total extinction (a true lower
    /// bound on the separation count).
    CertifiedOnly,
    /// Also count candidates that never met within the horizon of a
    /// censored trajectory.
    CountUnresolved,
}

/// Lower bound on the number of positive separation times of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeparationCount {
    pub k_lower: u64,
    pub censored: bool,
}

/// Scans every transition that produces a gap and replays group labels
/// forward to classify it as permanently separating or not.
///
/// A transition time counts once if at least one gap it produced splits the
/// configuration into groups that never become adjacent for the rest of the
/// trajectory. The classification is exact when the trajectory ends in
/// extinction; otherwise surviving candidates are unresolved and the count
/// is censored. Quadratic in the trajectory length; intended for analysis,
/// not hot paths.
pub fn count_separation_times(traj: &Trajectory, policy: HorizonPolicy) -> SeparationCount {
    let configs = traj.replay_configs();
    let extinct = traj.status == Status::Extinct;
    let mut k_lower = 0u64;
    for e in 0..traj.records.len() {
        let produced = produced_gaps(&configs[e], &configs[e + 1]);
        if produced.is_empty() {
            continue;
        }
        let counts = |still_alive: bool| still_alive && policy == HorizonPolicy::CountUnresolved;
        let mut separates = false;
        for gap in produced {
            let mut left: BTreeSet<i64> = BTreeSet::new();
            let mut right: BTreeSet<i64> = BTreeSet::new();
            for &s in configs[e + 1].sites() {
                if s < gap {
                    left.insert(s);
                } else {
                    right.insert(s);
                }
            }
            let mut met = false;
            for rec in &traj.records[e + 1..] {
                let owner = if left.contains(&rec.event.site) {
                    &mut left
                } else {
                    &mut right
                };
                apply_to_set(owner, rec.event);
                if sets_adjacent(&left, &right) {
                    met = true;
                    break;
                }
            }
            if !met && (extinct || counts(true)) {
                separates = true;
                break;
            }
        }
        if separates {
            k_lower += 1;
        }
    }
    SeparationCount {
        k_lower,
        censored: !extinct,
    }
}
