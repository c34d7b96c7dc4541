//! Event-driven continuous-time simulation with localized rate maintenance.
//!
//! Each step realizes the generator directly: a single exponential race over
//! the summed event rates picks the holding time, and the event is chosen
//! categorically with probability `rate / total`. Rates live in per-particle
//! slots indexed by a sum tree, so selection is `O(log n)` and, after an
//! event at site `i`, only the particles within distance 2 of the modified
//! sites have their rates recomputed.
//!
//! The width process is post-processed by [`extract_width_chain`] into the
//! embedded growth chain: the sequence of width-change times with their
//! increments, cut off at the first extinction or drop by more than two
//! units. Past the cutoff the increments are replaced by i.i.d. draws from
//! the three-point law of [`sample_z`].

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::lattice::{EventKind, LocalEvent, RateParams, SiteConfiguration};
use crate::rng::Rng;

/// Errors from simulation parameter validation and sampling preconditions.
#[derive(Debug, Clone, PartialEq)]
pub enum EngineError {
    /// `max_events` must be at least 1.
    BadMaxEvents(u64),
    /// `max_time` must be positive (infinity is allowed).
    BadMaxTime(f64),
    /// `width_cap` must be 0 (disabled) or at least 2.
    BadWidthCap(u64),
    /// A step was requested from the empty (absorbing) configuration.
    EmptyConfiguration,
    /// The three-point width law is only a distribution for `b > 2`.
    BranchRateTooSmall(f64),
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadMaxEvents(v) => write!(f, "max_events must be >= 1, got {v}"),
            Self::BadMaxTime(v) => write!(f, "max_time must be > 0, got {v}"),
            Self::BadWidthCap(v) => write!(f, "width_cap must be 0 or >= 2, got {v}"),
            Self::EmptyConfiguration => write!(f, "no enabled events in the empty configuration"),
            Self::BranchRateTooSmall(b) => {
                write!(f, "the width-increment law requires b > 2, got b={b}")
            }
        }
    }
}

impl core::error::Error for EngineError {}

/// Budget and stop conditions for one simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub seed: u64,
    pub max_events: u64,
    /// Model-time horizon; `f64::INFINITY` disables it.
    pub max_time: f64,
    /// Stop once the width reaches this value after an event; 0 disables.
    pub width_cap: u64,
}

impl SimParams {
    pub fn new(
        seed: u64,
        max_events: u64,
        max_time: f64,
        width_cap: u64,
    ) -> Result<Self, EngineError> {
        let params = Self {
            seed,
            max_events,
            max_time,
            width_cap,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.max_events < 1 {
            return Err(EngineError::BadMaxEvents(self.max_events));
        }
        if self.max_time.is_nan() || self.max_time <= 0.0 {
            return Err(EngineError::BadMaxTime(self.max_time));
        }
        if self.width_cap == 1 {
            return Err(EngineError::BadWidthCap(self.width_cap));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    /// Reached the empty configuration.
    Extinct,
    /// Next event would exceed `max_time`.
    TimeCap,
    /// Executed `max_events` events.
    EventCap,
    /// Width reached `width_cap`.
    WidthCap,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Extinct => "Extinct",
            Status::TimeCap => "TimeCap",
            Status::EventCap => "EventCap",
            Status::WidthCap => "WidthCap",
        }
    }
}

/// One executed event with its absolute time and the width it left behind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub time: f64,
    pub event: LocalEvent,
    pub width_after: u64,
}

/// Complete record of one run: initial state, every executed event, the
/// terminal state and the stop reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: SiteConfiguration,
    pub records: Vec<JumpRecord>,
    pub status: Status,
    pub final_config: SiteConfiguration,
}

impl Trajectory {
    /// Configurations along the run: the initial one, then one per record.
    ///
    /// Rebuilds states by reapplying events, so this is for analysis and
    /// fixtures rather than hot paths.
    pub fn replay_configs(&self) -> Vec<SiteConfiguration> {
        let mut out = Vec::with_capacity(self.records.len() + 1);
        out.push(self.initial.clone());
        let mut current = self.initial.clone();
        for rec in &self.records {
            current = current
                .apply_event(rec.event)
                .expect("trajectory records replay cleanly");
            out.push(current.clone());
        }
        out
    }
}

/// Entry of the embedded width chain: a width-change time, the new width,
/// and the increment that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainEntry {
    pub tau: f64,
    pub w: u64,
    pub v: i64,
}

/// The width process sampled at its own transition times, with the cutoff
/// index at the first extinction or drop below -2.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedWidthChain {
    /// Width-change entries up to and including the cutoff entry.
    pub entries: Vec<ChainEntry>,
    /// 1-based index of the first entry with `w == 0` or `v <= -3`, if the
    /// trajectory reached one; equals `entries.len()` when set.
    pub cutoff_n: Option<usize>,
}

/// Keeps the width-change subsequence of a trajectory and locates the cutoff.
///
/// Entries past the cutoff are not emitted; consumers substitute independent
/// draws from [`sample_z`] there.
pub fn extract_width_chain(trajectory: &Trajectory) -> EmbeddedWidthChain {
    let mut entries = Vec::new();
    let mut cutoff_n = None;
    let mut w_prev = trajectory.initial.width();
    for rec in &trajectory.records {
        let w = rec.width_after;
        if w == w_prev {
            continue;
        }
        let v = w as i64 - w_prev as i64;
        entries.push(ChainEntry {
            tau: rec.time,
            w,
            v,
        });
        if w == 0 || v <= -3 {
            cutoff_n = Some(entries.len());
            break;
        }
        w_prev = w;
    }
    EmbeddedWidthChain { entries, cutoff_n }
}

/// Draws from the three-point law `P{-2} = P{-1} = 2/(2+b)`,
/// `P{+1} = 1 - 4/(2+b)`, which requires `b > 2`.
pub fn sample_z(b: f64, rng: &mut Rng) -> Result<i64, EngineError> {
    if b.is_nan() || b <= 2.0 {
        return Err(EngineError::BranchRateTooSmall(b));
    }
    let q = 2.0 / (2.0 + b);
    let u = rng.next_f64();
    Ok(if u < q {
        -2
    } else if u < 2.0 * q {
        -1
    } else {
        1
    })
}

const KIND_ORDER: [EventKind; 3] = [EventKind::JumpRight, EventKind::JumpLeft, EventKind::Branch];

/// Per-particle rate slot; freed slots keep zero weight in the tree.
#[derive(Clone, Copy)]
struct Slot {
    site: i64,
    rates: [f64; 3],
    live: bool,
}

/// Occupancy and slot ids for one aligned block of 64 sites.
///
/// Pages live in an ordered map keyed by `site >> 6`, so point queries stay
/// within one or two shallow nodes, extremes come from the first and last
/// page, and arbitrarily sparse configurations cost memory only per
/// occupied block.
#[derive(Clone)]
struct Page {
    bits: u64,
    slots: [u32; 64],
}

impl Page {
    fn empty() -> Self {
        Self {
            bits: 0,
            slots: [0; 64],
        }
    }
}

#[derive(Clone, Default)]
struct SiteIndex {
    pages: BTreeMap<i64, Page>,
    count: usize,
}

impl SiteIndex {
    fn split(site: i64) -> (i64, u32) {
        (site >> 6, (site & 63) as u32)
    }

    fn occupied(&self, site: i64) -> bool {
        let (page, bit) = Self::split(site);
        self.pages
            .get(&page)
            .is_some_and(|p| p.bits >> bit & 1 == 1)
    }

    fn slot_of(&self, site: i64) -> Option<u32> {
        let (page, bit) = Self::split(site);
        let p = self.pages.get(&page)?;
        (p.bits >> bit & 1 == 1).then(|| p.slots[bit as usize])
    }

    fn insert(&mut self, site: i64, slot: u32) {
        let (page, bit) = Self::split(site);
        let p = self.pages.entry(page).or_insert_with(Page::empty);
        debug_assert_eq!(p.bits >> bit & 1, 0);
        p.bits |= 1 << bit;
        p.slots[bit as usize] = slot;
        self.count += 1;
    }

    fn remove(&mut self, site: i64) -> u32 {
        let (page, bit) = Self::split(site);
        let p = self
            .pages
            .get_mut(&page)
            .expect("removing an occupied site");
        debug_assert_eq!(p.bits >> bit & 1, 1);
        let slot = p.slots[bit as usize];
        p.bits &= !(1 << bit);
        if p.bits == 0 {
            self.pages.remove(&page);
        }
        self.count -= 1;
        slot
    }

    fn leftmost(&self) -> Option<i64> {
        let (page, p) = self.pages.iter().next()?;
        Some(page * 64 + p.bits.trailing_zeros() as i64)
    }

    fn rightmost(&self) -> Option<i64> {
        let (page, p) = self.pages.iter().next_back()?;
        Some(page * 64 + 63 - p.bits.leading_zeros() as i64)
    }

    fn sites(&self) -> impl Iterator<Item = i64> + '_ {
        self.pages.iter().flat_map(|(page, p)| {
            let base = page * 64;
            let bits = p.bits;
            (0..64).filter_map(move |bit| (bits >> bit & 1 == 1).then_some(base + bit))
        })
    }
}

/// Power-of-two sum tree over slot weights.
///
/// Updates recompute the path as exact parent sums of current child values,
/// so the stored totals never accumulate drift relative to the leaves.
struct RateTree {
    cap: usize,
    nodes: Vec<f64>,
}

impl RateTree {
    fn new(cap_hint: usize) -> Self {
        let cap = cap_hint.next_power_of_two().max(2);
        Self {
            cap,
            nodes: vec![0.0; 2 * cap],
        }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    fn get(&self, leaf: usize) -> f64 {
        self.nodes[self.cap + leaf]
    }

    fn set(&mut self, leaf: usize, value: f64) {
        let mut i = self.cap + leaf;
        self.nodes[i] = value;
        while i > 1 {
            i >>= 1;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Leaf containing prefix mass `u`, plus the residual mass within it.
    fn select(&self, mut u: f64) -> (usize, f64) {
        let mut i = 1;
        while i < self.cap {
            let left = self.nodes[2 * i];
            if u < left {
                i *= 2;
            } else {
                u -= left;
                i = 2 * i + 1;
            }
        }
        (i - self.cap, u)
    }

    /// Doubles capacity, preserving leaf values.
    fn grow(&mut self) {
        let old_cap = self.cap;
        let mut bigger = RateTree::new(old_cap * 2);
        for leaf in 0..old_cap {
            if self.get(leaf) != 0.0 {
                bigger.set(leaf, self.get(leaf));
            }
        }
        *self = bigger;
    }
}

/// Live simulation state: occupancy, per-particle rates, and the sum tree.
///
/// One `Simulation` is owned by one execution context; independent trials
/// each build their own and may run concurrently without synchronization.
pub struct Simulation {
    params: RateParams,
    index: SiteIndex,
    slots: Vec<Slot>,
    free: Vec<u32>,
    tree: RateTree,
    time: f64,
    events: u64,
}

impl Simulation {
    pub fn new(initial: &SiteConfiguration, params: RateParams) -> Self {
        let mut sim = Self {
            params,
            index: SiteIndex::default(),
            slots: Vec::with_capacity(initial.len()),
            free: Vec::new(),
            tree: RateTree::new(initial.len().max(16)),
            time: 0.0,
            events: 0,
        };
        for &site in initial.sites() {
            sim.insert_site(site);
        }
        for &site in initial.sites() {
            sim.refresh_site(site);
        }
        sim
    }

    pub fn params(&self) -> RateParams {
        self.params
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn is_empty(&self) -> bool {
        self.index.count == 0
    }

    pub fn particle_count(&self) -> usize {
        self.index.count
    }

    pub fn occupied(&self, site: i64) -> bool {
        self.index.occupied(site)
    }

    pub fn leftmost(&self) -> Option<i64> {
        self.index.leftmost()
    }

    pub fn rightmost(&self) -> Option<i64> {
        self.index.rightmost()
    }

    pub fn width(&self) -> u64 {
        match (self.leftmost(), self.rightmost()) {
            (Some(l), Some(r)) => (r - l + 1) as u64,
            _ => 0,
        }
    }

    /// Sum of all enabled-event rates, as maintained by the tree.
    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    /// The maintained `[right, left, branch]` rates of the particle at
    /// `site`, if occupied. Exposed so tests can compare the incremental
    /// bookkeeping against a full recomputation.
    pub fn stored_rates(&self, site: i64) -> Option<[f64; 3]> {
        self.index
            .slot_of(site)
            .map(|slot| self.slots[slot as usize].rates)
    }

    /// Snapshot of the current configuration.
    pub fn config(&self) -> SiteConfiguration {
        SiteConfiguration::new(self.index.sites()).expect("simulation state keeps even parity")
    }

    fn insert_site(&mut self, site: i64) {
        let slot = match self.free.pop() {
            Some(s) => {
                self.slots[s as usize] = Slot {
                    site,
                    rates: [0.0; 3],
                    live: true,
                };
                s
            }
            None => {
                if self.slots.len() >= self.tree.cap {
                    self.tree.grow();
                }
                self.slots.push(Slot {
                    site,
                    rates: [0.0; 3],
                    live: true,
                });
                (self.slots.len() - 1) as u32
            }
        };
        self.index.insert(site, slot);
    }

    fn remove_site(&mut self, site: i64) {
        let slot = self.index.remove(site);
        self.slots[slot as usize].live = false;
        self.tree.set(slot as usize, 0.0);
        self.free.push(slot);
    }

    /// Recomputes the slot rates of the particle at `site` from its current
    /// neighborhood; no-op when the site is vacant.
    fn refresh_site(&mut self, site: i64) {
        let Some(slot) = self.index.slot_of(site) else {
            return;
        };
        let p = self.params.p();
        let b = self.params.b();
        let right = self.index.occupied(site + 1);
        let left = self.index.occupied(site - 1);
        let rates = [
            if right { p } else { 1.0 },
            if left { p } else { 1.0 },
            if right || left { p * b } else { b },
        ];
        self.slots[slot as usize].rates = rates;
        self.tree.set(slot as usize, rates[0] + rates[1] + rates[2]);
    }

    fn toggle(&mut self, site: i64) {
        if self.occupied(site) {
            self.remove_site(site);
        } else {
            self.insert_site(site);
        }
    }

    /// Applies `ev` and refreshes exactly the particles whose neighborhoods
    /// the toggled sites touch. Does not advance the clock.
    pub fn apply(&mut self, ev: LocalEvent) -> Result<(), EngineError> {
        if !self.occupied(ev.site) {
            return Err(EngineError::EmptyConfiguration);
        }
        let (lo, hi) = match ev.kind {
            EventKind::JumpRight => {
                self.toggle(ev.site);
                self.toggle(ev.site + 1);
                (ev.site, ev.site + 1)
            }
            EventKind::JumpLeft => {
                self.toggle(ev.site - 1);
                self.toggle(ev.site);
                (ev.site - 1, ev.site)
            }
            EventKind::Branch => {
                self.toggle(ev.site - 1);
                self.toggle(ev.site + 1);
                (ev.site - 1, ev.site + 1)
            }
        };
        for site in (lo - 1)..=(hi + 1) {
            self.refresh_site(site);
        }
        Ok(())
    }

    /// Samples an event with probability `rate / total_rate` without
    /// applying it. `None` when the configuration is empty.
    pub fn sample_event(&mut self, rng: &mut Rng) -> Option<LocalEvent> {
        let total = self.tree.total();
        if self.is_empty() || total <= 0.0 {
            return None;
        }
        loop {
            let (leaf, residual) = self.tree.select(rng.next_f64() * total);
            let Some(slot) = self.slots.get(leaf) else {
                continue;
            };
            if !slot.live {
                // can only happen on a floating-point boundary tie; redraw
                continue;
            }
            let mut acc = 0.0;
            let mut kind = EventKind::Branch;
            for (k, &r) in KIND_ORDER.iter().zip(slot.rates.iter()) {
                acc += r;
                if residual < acc {
                    kind = *k;
                    break;
                }
            }
            return Some(LocalEvent::new(slot.site, kind));
        }
    }

    /// One full step: exponential holding time at the current total rate,
    /// categorical event pick, and application. Returns the holding time and
    /// the executed event, or `None` from the empty configuration.
    pub fn advance(&mut self, rng: &mut Rng) -> Option<(f64, LocalEvent)> {
        let total = self.tree.total();
        let ev = self.sample_event(rng)?;
        let holding = rng.exp(total);
        self.apply(ev)
            .expect("sampled events act on occupied sites");
        self.time += holding;
        self.events += 1;
        Some((holding, ev))
    }
}

/// One transition sampled directly from the enabled-event list.
///
/// This is the reference single-step path: it enumerates rates afresh and
/// walks the categorical distribution linearly, independent of the sum-tree
/// bookkeeping in [`Simulation`]. Errors on the empty configuration.
pub fn step(
    config: &SiteConfiguration,
    params: RateParams,
    rng: &mut Rng,
) -> Result<(f64, LocalEvent), EngineError> {
    let events = crate::lattice::enabled_events(config, params);
    if events.is_empty() {
        return Err(EngineError::EmptyConfiguration);
    }
    let total: f64 = events.iter().map(|&(_, r)| r).sum();
    let holding = rng.exp(total);
    let mut u = rng.next_f64() * total;
    for &(ev, r) in &events {
        if u < r {
            return Ok((holding, ev));
        }
        u -= r;
    }
    Ok((holding, events[events.len() - 1].0))
}

/// Runs the stop-condition loop, reporting each executed event to
/// `on_event` as `(time, event, width_after)`.
///
/// This is the single source of truth for cap semantics: extinction and the
/// width cap are checked after each applied event, the event budget before
/// sampling the next one, and the time horizon between sampling and
/// applying (the run stops short of an event that would overshoot it). The
/// initial configuration is never checked against the width cap, so a run
/// started at or above the cap still executes its first event.
pub fn drive(
    initial: &SiteConfiguration,
    rate_params: RateParams,
    sim_params: SimParams,
    mut on_event: impl FnMut(f64, LocalEvent, u64),
) -> Result<(Status, Simulation), EngineError> {
    sim_params.validate()?;
    let mut rng = Rng::new(sim_params.seed);
    let mut sim = Simulation::new(initial, rate_params);
    let status = loop {
        if sim.is_empty() {
            break Status::Extinct;
        }
        if sim.events() >= sim_params.max_events {
            break Status::EventCap;
        }
        let total = sim.total_rate();
        let ev = sim
            .sample_event(&mut rng)
            .expect("nonempty configuration has events");
        let holding = rng.exp(total);
        if sim.time() + holding > sim_params.max_time {
            break Status::TimeCap;
        }
        sim.apply(ev).expect("sampled events act on occupied sites");
        sim.time += holding;
        sim.events += 1;
        let width_after = sim.width();
        on_event(sim.time(), ev, width_after);
        if sim.is_empty() {
            break Status::Extinct;
        }
        if sim_params.width_cap > 0 && width_after >= sim_params.width_cap {
            break Status::WidthCap;
        }
    };
    Ok((status, sim))
}

/// Runs the process from `initial` until extinction or a budget cap, and
/// records every executed event.
///
/// Determinism contract: identical `(initial, rate_params, sim_params)`
/// produce identical trajectories.
pub fn simulate(
    initial: &SiteConfiguration,
    rate_params: RateParams,
    sim_params: SimParams,
) -> Result<Trajectory, EngineError> {
    let mut records = Vec::new();
    let (status, sim) = drive(
        initial,
        rate_params,
        sim_params,
        |time, event, width_after| {
            records.push(JumpRecord {
                time,
                event,
                width_after,
            });
        },
    )?;
    Ok(Trajectory {
        initial: initial.clone(),
        records,
        status,
        final_config: sim.config(),
    })
}
