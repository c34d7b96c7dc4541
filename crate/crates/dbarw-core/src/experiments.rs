//! Monte Carlo survival estimation, phase sweeps, and the exact
//! width-truncated extinction oracle.
//!
//! Survival is estimated through a one-sided proxy: a trial that reaches the
//! width cap counts as survived (a surviving population's width grows
//! without bound), extinction counts as extinct, and runs ended by event or
//! time budgets stay censored. Wilson intervals carry both censoring
//! conventions: the lower bound treats censored trials as extinct, the
//! upper bound treats them as survived.
//!
//! The oracle validates the estimator from the other direction. Rates are
//! translation invariant, so configurations anchored at the leftmost
//! particle with width below the window form a finite embedded jump chain;
//! transitions that reach the window width are absorbed as SURVIVE, the
//! empty configuration as EXTINCT, and the extinction probabilities solve a
//! dense linear system. With the width cap equal to the oracle window the
//! Monte Carlo classifier and the oracle measure the same functional.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::engine::{drive, EngineError, SimParams, Status};
use crate::lattice::{enabled_events, LatticeError, RateParams, SiteConfiguration};
use crate::rng::mix_seed;

/// Two-sided 95% normal quantile used by the Wilson intervals.
pub const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentsError {
    /// Oracle windows are limited to `2 <= L <= 14`.
    BadWindow(u64),
    /// At least one trial is required.
    ZeroTrials,
    /// Survival estimation needs a nonempty initial configuration.
    EmptyInitial,
    /// Parameter grids must be nonempty.
    EmptyGrid,
    /// The initial configuration does not fit the oracle window.
    NotInWindow,
    /// The linear solve did not reach the required residual.
    ResidualTooLarge(f64),
    Engine(EngineError),
    Lattice(LatticeError),
}

impl fmt::Display for ExperimentsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadWindow(l) => write!(f, "oracle window must satisfy 2 <= L <= 14, got {l}"),
            Self::ZeroTrials => write!(f, "at least one trial is required"),
            Self::EmptyInitial => write!(f, "initial configuration must be nonempty"),
            Self::EmptyGrid => write!(f, "parameter grids must be nonempty"),
            Self::NotInWindow => write!(f, "initial configuration exceeds the oracle window"),
            Self::ResidualTooLarge(r) => {
                write!(f, "absorption solve residual {r:e} exceeds 1e-12")
            }
            Self::Engine(e) => write!(f, "{e}"),
            Self::Lattice(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ExperimentsError {}

impl From<EngineError> for ExperimentsError {
    fn from(e: EngineError) -> Self {
        Self::Engine(e)
    }
}

impl From<LatticeError> for ExperimentsError {
    fn from(e: LatticeError) -> Self {
        Self::Lattice(e)
    }
}

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    debug_assert!(successes <= trials && trials > 0);
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p_hat + z2 / (2.0 * n);
    let rad = z * libm::sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n));
    (
        ((center - rad) / denom).max(0.0),
        ((center + rad) / denom).min(1.0),
    )
}

/// Classification of one simulation run under the width-cap proxy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialClass {
    Extinct,
    Survived,
    Censored,
}

pub fn classify_status(status: Status) -> TrialClass {
    match status {
        Status::Extinct => TrialClass::Extinct,
        Status::WidthCap => TrialClass::Survived,
        Status::TimeCap | Status::EventCap => TrialClass::Censored,
    }
}

/// Runs trial number `trial_index` of an ensemble without recording events.
///
/// The trial consumes the derived stream `mix_seed(master_seed,
/// trial_index)`; the `seed` field of `caps` is ignored.
pub fn survival_trial(
    initial: &SiteConfiguration,
    rate_params: RateParams,
    caps: SimParams,
    master_seed: u64,
    trial_index: u64,
) -> Result<TrialClass, EngineError> {
    let sp = SimParams {
        seed: mix_seed(master_seed, trial_index),
        ..caps
    };
    let (status, _) = drive(initial, rate_params, sp, |_, _, _| {})?;
    Ok(classify_status(status))
}

/// Survival frequency with Wilson 95% bounds under both censoring
/// conventions: `ci_low` treats censored trials as extinct, `ci_high` as
/// survived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEstimate {
    pub trials: u64,
    pub extinct: u64,
    pub survived: u64,
    pub censored: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Builds the estimate from classified counts.
pub fn summarize_survival(extinct: u64, survived: u64, censored: u64) -> SurvivalEstimate {
    let trials = extinct + survived + censored;
    debug_assert!(trials > 0);
    let point = survived as f64 / trials as f64;
    let (ci_low, _) = wilson_interval(survived, trials, Z95);
    let (_, ci_high) = wilson_interval(survived + censored, trials, Z95);
    SurvivalEstimate {
        trials,
        extinct,
        survived,
        censored,
        point,
        ci_low,
        ci_high,
    }
}

/// Runs `trials` independent simulations and summarizes the width-cap
/// survival proxy. Trial `t` uses stream `mix_seed(master_seed, t)`.
pub fn estimate_survival(
    initial: &SiteConfiguration,
    rate_params: RateParams,
    sim_params: SimParams,
    trials: u64,
    master_seed: u64,
) -> Result<SurvivalEstimate, ExperimentsError> {
    if trials == 0 {
        return Err(ExperimentsError::ZeroTrials);
    }
    if initial.is_empty() {
        return Err(ExperimentsError::EmptyInitial);
    }
    sim_params.validate()?;
    let mut counts = [0u64; 3];
    for t in 0..trials {
        let class = survival_trial(initial, rate_params, sim_params, master_seed, t)?;
        counts[class as usize] += 1;
    }
    Ok(summarize_survival(counts[0], counts[1], counts[2]))
}

/// One cell of a `(p, b)` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub p: f64,
    pub b: f64,
    pub estimate: SurvivalEstimate,
}

/// Full cross-product sweep over the two grids (`p` outer, `b` inner).
///
/// Cell `c` (row-major index) estimates with master seed
/// `mix_seed(master_seed, c)`, so any scheduling of the cells reproduces
/// identical output.
pub fn sweep_phase(
    p_grid: &[f64],
    b_grid: &[f64],
    initial: &SiteConfiguration,
    sim_params: SimParams,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<PhasePoint>, ExperimentsError> {
    if p_grid.is_empty() || b_grid.is_empty() {
        return Err(ExperimentsError::EmptyGrid);
    }
    let mut out = Vec::with_capacity(p_grid.len() * b_grid.len());
    for (pi, &p) in p_grid.iter().enumerate() {
        for (bi, &b) in b_grid.iter().enumerate() {
            let cell = (pi * b_grid.len() + bi) as u64;
            let params = RateParams::new(p, b)?;
            let estimate = estimate_survival(
                initial,
                params,
                sim_params,
                trials,
                mix_seed(master_seed, cell),
            )?;
            out.push(PhasePoint { p, b, estimate });
        }
    }
    Ok(out)
}

/// Exact extinction probabilities of the width-truncated, translation-
/// quotiented embedded jump chain.
pub struct OracleModel {
    window: u64,
    params: RateParams,
    states: Vec<SiteConfiguration>,
    index: BTreeMap<SiteConfiguration, usize>,
    rows: Vec<OracleRow>,
    absorption: Vec<f64>,
    residual: f64,
}

struct OracleRow {
    targets: Vec<(usize, f64)>,
    to_extinct: f64,
    to_survive: f64,
}

impl OracleModel {
    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn params(&self) -> RateParams {
        self.params
    }

    /// Anchored transient states in enumeration order (by width, then
    /// interior occupancy bits).
    pub fn states(&self) -> &[SiteConfiguration] {
        &self.states
    }

    pub fn absorption(&self) -> &[f64] {
        &self.absorption
    }

    /// Achieved max-norm residual of the linear solve.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Total outgoing jump-chain mass of state `i` (equals 1 up to
    /// round-off).
    pub fn row_mass(&self, i: usize) -> f64 {
        let row = &self.rows[i];
        row.to_extinct + row.to_survive + row.targets.iter().map(|&(_, q)| q).sum::<f64>()
    }

    /// Extinction probability of `config` in this truncated chain: 1 for
    /// the empty configuration, `None` when the width exceeds the window
    /// (not representable). Width-`window` configurations are queryable
    /// initials like any other state; their transitions mostly absorb into
    /// SURVIVE.
    pub fn absorption_of(&self, config: &SiteConfiguration) -> Option<f64> {
        if config.is_empty() {
            return Some(1.0);
        }
        if config.width() > self.window {
            return None;
        }
        let anchored = config.translated(-config.leftmost().expect("nonempty"));
        self.index.get(&anchored).map(|&i| self.absorption[i])
    }
}

/// Enumerates the even configurations anchored at the leftmost particle
/// with width up to `window_l`, builds the embedded jump chain, and solves
/// the absorption system.
///
/// Transitions whose result has width `>= window_l` are absorbed as SURVIVE
/// (probability-0 extinction), matching the Monte Carlo width-cap
/// classifier, and the empty configuration is absorbed as EXTINCT.
pub fn build_oracle(window_l: u64, params: RateParams) -> Result<OracleModel, ExperimentsError> {
    if !(2..=14).contains(&window_l) {
        return Err(ExperimentsError::BadWindow(window_l));
    }
    let mut states = Vec::new();
    for w in 2..=window_l {
        let interior = w - 2;
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
            sites.push(w as i64 - 1);
            states.push(SiteConfiguration::new(sites).expect("even by construction"));
        }
    }
    let index: BTreeMap<SiteConfiguration, usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();

    let n = states.len();
    let mut rows = Vec::with_capacity(n);
    for config in &states {
        let events = enabled_events(config, params);
        let total: f64 = events.iter().map(|&(_, r)| r).sum();
        let mut to_extinct = 0.0;
        let mut to_survive = 0.0;
        let mut targets: BTreeMap<usize, f64> = BTreeMap::new();
        for (ev, rate) in events {
            let prob = rate / total;
            let next = config
                .apply_event(ev)
                .expect("enabled events are applicable");
            if next.is_empty() {
                to_extinct += prob;
            } else if next.width() >= window_l {
                to_survive += prob;
            } else {
                let anchored = next.translated(-next.leftmost().expect("nonempty"));
                let j = index[&anchored];
                *targets.entry(j).or_insert(0.0) += prob;
            }
        }
        rows.push(OracleRow {
            targets: targets.into_iter().collect(),
            to_extinct,
            to_survive,
        });
    }

    // solve (I - Q) a = r by Gaussian elimination with partial pivoting
    let mut a = vec![0.0f64; n * n];
    let mut rhs = vec![0.0f64; n];
    for (i, row) in rows.iter().enumerate() {
        a[i * n + i] = 1.0;
        for &(j, q) in &row.targets {
            a[i * n + j] -= q;
        }
        rhs[i] = row.to_extinct;
    }
    let absorption = solve_dense(n, &mut a, &mut rhs)?;

    let mut residual = 0.0f64;
    for (i, row) in rows.iter().enumerate() {
        let reached: f64 = row.targets.iter().map(|&(j, q)| q * absorption[j]).sum();
        let r = libm::fabs(absorption[i] - reached - row.to_extinct);
        residual = residual.max(r);
    }
    if residual >= 1e-12 {
        return Err(ExperimentsError::ResidualTooLarge(residual));
    }

    Ok(OracleModel {
        window: window_l,
        params,
        states,
        index,
        rows,
        absorption,
        residual,
    })
}

/// In-place Gaussian elimination with partial pivoting on a dense
/// row-major matrix.
fn solve_dense(n: usize, a: &mut [f64], rhs: &mut [f64]) -> Result<Vec<f64>, ExperimentsError> {
    for col in 0..n {
        let mut pivot = col;
        let mut best = libm::fabs(a[col * n + col]);
        for r in col + 1..n {
            let v = libm::fabs(a[r * n + col]);
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == 0.0 {
            return Err(ExperimentsError::ResidualTooLarge(f64::INFINITY));
        }
        if pivot != col {
            for k in col..n {
                a.swap(col * n + k, pivot * n + k);
            }
            rhs.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= factor * a[col * n + k];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for k in i + 1..n {
            acc -= a[i * n + k] * x[k];
        }
        x[i] = acc / a[i * n + i];
    }
    Ok(x)
}

/// Oracle-vs-Monte-Carlo agreement report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMcReport {
    pub window: u64,
    pub oracle_absorption: f64,
    pub trials: u64,
    pub extinct: u64,
    pub survived: u64,
    pub censored: u64,
    /// Empirical extinction frequency and its Wilson 95% interval.
    pub mc_extinction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub agrees: bool,
}

/// Monte Carlo with `width_cap` set to the oracle window, checked against
/// the oracle's extinction probability.
///
/// `sim_params.seed` acts as the master seed for the derived per-trial
/// streams; its `width_cap` is overridden by the window.
pub fn compare_oracle_mc(
    oracle: &OracleModel,
    initial: &SiteConfiguration,
    sim_params: SimParams,
    trials: u64,
) -> Result<OracleMcReport, ExperimentsError> {
    if trials == 0 {
        return Err(ExperimentsError::ZeroTrials);
    }
    if initial.is_empty() {
        return Err(ExperimentsError::EmptyInitial);
    }
    let oracle_absorption = oracle
        .absorption_of(initial)
        .ok_or(ExperimentsError::NotInWindow)?;
    let caps = SimParams {
        width_cap: oracle.window(),
        ..sim_params
    };
    caps.validate()?;
    let mut counts = [0u64; 3];
    for t in 0..trials {
        let class = survival_trial(initial, oracle.params(), caps, sim_params.seed, t)?;
        counts[class as usize] += 1;
    }
    let (extinct, survived, censored) = (counts[0], counts[1], counts[2]);
    let mc_extinction = extinct as f64 / trials as f64;
    let (ci_low, ci_high) = wilson_interval(extinct, trials, Z95);
    Ok(OracleMcReport {
        window: oracle.window(),
        oracle_absorption,
        trials,
        extinct,
        survived,
        censored,
        mc_extinction,
        ci_low,
        ci_high,
        agrees: ci_low <= oracle_absorption && oracle_absorption <= ci_high,
    })
}
