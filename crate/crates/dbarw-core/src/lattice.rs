//! Configurations, transition kinds, exact rates, and the height bijection.
//!
//! A state is a finite even-cardinality set of occupied integer sites. The
//! three transition kinds of the dynamics are nearest-neighbor jumps (right,
//! left) and a double branching that toggles both neighbor sites; all site
//! updates are modulo 2, which is what makes coinciding particles annihilate.
//!
//! Rates are the nearest-neighbor dependent choices
//!
//! ```text
//! right(i)  = y[i] * (1 - (1-p) * y[i+1])
//! left(i)   = y[i] * (1 - (1-p) * y[i-1])
//! branch(i) = b * y[i] * (p + (1-p) * (1 - y[i+1]) * (1 - y[i-1]))
//! ```
//!
//! so an unobstructed hop runs at rate 1, a hop onto an occupied neighbor
//! (an annihilation) at rate `p`, an unobstructed branching at rate `b`, and
//! a branching next to an occupied site at rate `p*b`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// Errors from configuration construction and event application.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeError {
    /// Site list has an odd number of entries.
    OddCardinality,
    /// Site list contains a duplicate entry.
    DuplicateSite(i64),
    /// The acting site of an event is not occupied.
    UnoccupiedSite(i64),
    /// Height list is not strictly increasing.
    UnsortedHeights,
    /// Rate parameters outside `0 < p <= 1`, `b > 0`.
    BadRateParams { p: f64, b: f64 },
    /// Configuration text contains a token that is not an integer.
    ParseSite(String),
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OddCardinality => write!(f, "configuration must hold an even number of sites"),
            Self::DuplicateSite(s) => write!(f, "site {s} listed twice"),
            Self::UnoccupiedSite(s) => write!(f, "no particle at site {s}"),
            Self::UnsortedHeights => write!(f, "height sites must be strictly increasing"),
            Self::BadRateParams { p, b } => {
                write!(
                    f,
                    "rate parameters need 0 < p <= 1 and b > 0, got p={p}, b={b}"
                )
            }
            Self::ParseSite(tok) => write!(f, "cannot parse site {tok:?}"),
        }
    }
}

impl core::error::Error for LatticeError {}

/// The pair `(p, b)`: annihilation-interaction factor and branching intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    p: f64,
    b: f64,
}

impl RateParams {
    /// Validates `0 < p <= 1` and `b > 0`.
    pub fn new(p: f64, b: f64) -> Result<Self, LatticeError> {
        if p > 0.0 && p <= 1.0 && b > 0.0 && p.is_finite() && b.is_finite() {
            Ok(Self { p, b })
        } else {
            Err(LatticeError::BadRateParams { p, b })
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// The three transition kinds a particle can perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    JumpRight,
    JumpLeft,
    Branch,
}

impl EventKind {
    pub const ALL: [EventKind; 3] = [EventKind::JumpRight, EventKind::JumpLeft, EventKind::Branch];

    /// Single-letter tag used by the trajectory dump format.
    pub fn tag(&self) -> char {
        match self {
            EventKind::JumpRight => 'R',
            EventKind::JumpLeft => 'L',
            EventKind::Branch => 'B',
        }
    }
}

/// One transition attempt: an acting particle position and a kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalEvent {
    pub site: i64,
    pub kind: EventKind,
}

impl LocalEvent {
    pub fn new(site: i64, kind: EventKind) -> Self {
        Self { site, kind }
    }
}

/// A finite even-cardinality set of occupied sites, kept strictly increasing.
///
/// The empty configuration is the absorbing vacuum state. Because the
/// cardinality is even, the width (rightmost minus leftmost plus one) can
/// never equal 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SiteConfiguration {
    sites: Vec<i64>,
}

impl SiteConfiguration {
    /// Builds a configuration from occupied sites in any order.
    ///
    /// Rejects duplicate entries and odd cardinalities.
    pub fn new(sites: impl IntoIterator<Item = i64>) -> Result<Self, LatticeError> {
        let mut sites: Vec<i64> = sites.into_iter().collect();
        sites.sort_unstable();
        for w in sites.windows(2) {
            if w[0] == w[1] {
                return Err(LatticeError::DuplicateSite(w[0]));
            }
        }
        if !sites.len().is_multiple_of(2) {
            return Err(LatticeError::OddCardinality);
        }
        Ok(Self { sites })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Number of particles (always even).
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    /// Occupied sites in strictly increasing order.
    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn occupied(&self, site: i64) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn leftmost(&self) -> Option<i64> {
        self.sites.first().copied()
    }

    pub fn rightmost(&self) -> Option<i64> {
        self.sites.last().copied()
    }

    /// Width `rightmost - leftmost + 1`; 0 for the empty configuration.
    ///
    /// Never equal to 1: a width-1 configuration would hold exactly one
    /// particle, which the even-cardinality invariant rules out.
    pub fn width(&self) -> u64 {
        match (self.leftmost(), self.rightmost()) {
            (Some(l), Some(r)) => (r - l + 1) as u64,
            _ => 0,
        }
    }

    /// Toggles occupancy of `site`: the coordinatewise mod-2 update.
    fn toggle(&mut self, site: i64) {
        match self.sites.binary_search(&site) {
            Ok(idx) => {
                self.sites.remove(idx);
            }
            Err(idx) => self.sites.insert(idx, site),
        }
    }

    /// Applies an event, returning the successor configuration.
    ///
    /// Jumps move the acting particle one site (annihilating on an occupied
    /// target); branchings toggle both neighbor sites. Rejects events whose
    /// acting site is unoccupied.
    pub fn apply_event(&self, ev: LocalEvent) -> Result<Self, LatticeError> {
        if !self.occupied(ev.site) {
            return Err(LatticeError::UnoccupiedSite(ev.site));
        }
        let mut next = self.clone();
        match ev.kind {
            EventKind::JumpRight => {
                next.toggle(ev.site);
                next.toggle(ev.site + 1);
            }
            EventKind::JumpLeft => {
                next.toggle(ev.site);
                next.toggle(ev.site - 1);
            }
            EventKind::Branch => {
                next.toggle(ev.site - 1);
                next.toggle(ev.site + 1);
            }
        }
        Ok(next)
    }

    /// Translates every site by `offset`.
    pub fn translated(&self, offset: i64) -> Self {
        Self {
            sites: self.sites.iter().map(|s| s + offset).collect(),
        }
    }

    /// The height representation: half-integer sites where the dual spin
    /// field is 1, normalized to 0 far to the left.
    ///
    /// The spin between integer sites `k` and `k+1` is the parity of the
    /// number of particles at sites `<= k`, so each particle marks one phase
    /// boundary of the heights. Even cardinality makes the support finite.
    pub fn to_heights(&self) -> HeightConfiguration {
        let mut ones = Vec::new();
        for pair in self.sites.chunks_exact(2) {
            ones.extend(pair[0]..pair[1]);
        }
        HeightConfiguration { ones }
    }
}

impl fmt::Display for SiteConfiguration {
    /// Text format: whitespace-separated sites on one line; empty output for
    /// the empty configuration.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in &self.sites {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for SiteConfiguration {
    type Err = LatticeError;

    /// Parses the text format: whitespace-separated integers; an empty or
    /// all-whitespace line is the empty configuration.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let sites = s
            .split_whitespace()
            .map(|tok| {
                tok.parse::<i64>()
                    .map_err(|_| LatticeError::ParseSite(tok.into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(sites)
    }
}

/// Height (swapping-voter) representation: the strictly increasing list of
/// half-integer sites carrying spin 1.
///
/// Entry `k` stands for the half-integer site `k + 1/2`. Maximal runs of
/// consecutive entries correspond to stretches of spin 1; the run boundaries
/// are exactly the particle positions of the source configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HeightConfiguration {
    ones: Vec<i64>,
}

impl HeightConfiguration {
    /// Builds from half-sites (entry `k` meaning `k + 1/2`), which must be
    /// strictly increasing.
    pub fn new(ones: impl IntoIterator<Item = i64>) -> Result<Self, LatticeError> {
        let ones: Vec<i64> = ones.into_iter().collect();
        if ones.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LatticeError::UnsortedHeights);
        }
        Ok(Self { ones })
    }

    pub fn ones(&self) -> &[i64] {
        &self.ones
    }

    pub fn is_empty(&self) -> bool {
        self.ones.is_empty()
    }

    /// Inverse of [`SiteConfiguration::to_heights`]: every maximal run
    /// `[a, b]` of consecutive half-sites contributes particles at `a` and
    /// `b + 1`.
    pub fn to_sites(&self) -> SiteConfiguration {
        let mut sites = Vec::new();
        let mut idx = 0;
        while idx < self.ones.len() {
            let start = self.ones[idx];
            let mut end = start;
            while idx + 1 < self.ones.len() && self.ones[idx + 1] == end + 1 {
                idx += 1;
                end += 1;
            }
            sites.push(start);
            sites.push(end + 1);
            idx += 1;
        }
        SiteConfiguration { sites }
    }
}

/// Instantaneous rate of `ev` in `config` under `params`.
///
/// Total function: unoccupied acting sites give rate 0.
pub fn event_rate(config: &SiteConfiguration, params: RateParams, ev: LocalEvent) -> f64 {
    if !config.occupied(ev.site) {
        return 0.0;
    }
    let p = params.p();
    let right = config.occupied(ev.site + 1);
    let left = config.occupied(ev.site - 1);
    match ev.kind {
        EventKind::JumpRight => {
            if right {
                p
            } else {
                1.0
            }
        }
        EventKind::JumpLeft => {
            if left {
                p
            } else {
                1.0
            }
        }
        EventKind::Branch => {
            if right || left {
                p * params.b()
            } else {
                params.b()
            }
        }
    }
}

/// All events with positive rate, with their rates.
///
/// Since `p > 0` every occupied site enables exactly its three kinds, so the
/// list holds `3 * len` entries whose rates sum to [`total_rate`].
pub fn enabled_events(config: &SiteConfiguration, params: RateParams) -> Vec<(LocalEvent, f64)> {
    let mut out = Vec::with_capacity(3 * config.len());
    for &site in config.sites() {
        for kind in EventKind::ALL {
            let ev = LocalEvent::new(site, kind);
            let rate = event_rate(config, params, ev);
            if rate > 0.0 {
                out.push((ev, rate));
            }
        }
    }
    out
}

/// Sum of all enabled-event rates; 0 exactly for the empty configuration.
pub fn total_rate(config: &SiteConfiguration, params: RateParams) -> f64 {
    let mut sum = 0.0;
    for &site in config.sites() {
        for kind in EventKind::ALL {
            sum += event_rate(config, params, LocalEvent::new(site, kind));
        }
    }
    sum
}
