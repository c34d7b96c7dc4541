//! Analytics for the embedded width-growth process.
//!
//! The width of a surviving population must grow, and the growth argument
//! rests on a handful of quantitative ingredients that this module makes
//! checkable:
//!
//! - the three-point increment law `Z` with `P{-2} = P{-1} = 2/(2+b)` and
//!   mean `1 - 10/(2+b)` ([`z_law`]);
//! - the per-transition decrement-rate bounds that force the width-change
//!   increments to dominate `Z` ([`decrement_bounds`]);
//! - the generating function `gamma(v, b) = E v^{-Z}` and its largest root
//!   `v* >= 4` of `gamma = 1/2`, which powers the geometric tail bound on
//!   the number of low-width hits ([`gamma`], [`solve_v_star`],
//!   [`hitting_tail_bound`]);
//! - the elementary sum bound `sum 1/(x^2 (u-x)^2) <= 6/u^2`
//!   ([`sum_bound_check`]);
//! - an empirical stochastic-domination test comparing simulated
//!   width-increment sums against i.i.d. `Z` sums ([`domination_test`]).

use alloc::vec::Vec;
use core::fmt;

use crate::engine::{sample_z, Simulation};
use crate::lattice::{RateParams, SiteConfiguration};
use crate::rng::Rng;

/// Errors from closed-form evaluation preconditions.
#[derive(Debug, Clone, PartialEq)]
pub enum WidthError {
    /// The increment law is only a distribution for `b > 2`.
    BranchRateTooSmall(f64),
    /// `gamma(., b) = 1/2` has no root at or above 4.
    NoRootAtLeastFour(f64),
    /// The domination test needs at least one trial and one step.
    EmptyTest,
}

impl fmt::Display for WidthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BranchRateTooSmall(b) => {
                write!(f, "the width-increment law requires b > 2, got b={b}")
            }
            Self::NoRootAtLeastFour(b) => {
                write!(f, "gamma(v, b) = 1/2 has no root v >= 4 for b={b}")
            }
            Self::EmptyTest => write!(f, "domination test needs trials >= 1 and n >= 1"),
        }
    }
}

impl core::error::Error for WidthError {}

/// The three-point width-increment law for a given branching intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZLaw {
    pub b: f64,
    pub p_minus2: f64,
    pub p_minus1: f64,
    pub p_plus1: f64,
    pub mean: f64,
}

/// Closed-form law `P{-2} = P{-1} = 2/(2+b)`, `P{+1} = 1 - 4/(2+b)`,
/// mean `1 - 10/(2+b)`. Requires `b > 2`.
pub fn z_law(b: f64) -> Result<ZLaw, WidthError> {
    if b.is_nan() || b <= 2.0 {
        return Err(WidthError::BranchRateTooSmall(b));
    }
    let q = 2.0 / (2.0 + b);
    Ok(ZLaw {
        b,
        p_minus2: q,
        p_minus1: q,
        p_plus1: 1.0 - 2.0 * q,
        mean: 1.0 - 10.0 / (2.0 + b),
    })
}

impl ZLaw {
    /// Variance of the law: `E Z^2 - (E Z)^2` with `E Z^2 = 1 + 6/(2+b)`.
    pub fn variance(&self) -> f64 {
        let second = 1.0 + 6.0 / (2.0 + self.b);
        second - self.mean * self.mean
    }
}

/// The three decrement-rate ratios bounded against `2/(2+b)`.
///
/// `bound_m2` caps the chance that a width transition drops the width by
/// two or more (an end annihilation at rate at most `4p` against a growth
/// rate of at least `2 + 2pb`). The `m1` bounds cap a drop by exactly one,
/// split on whether the site next to the moving end is vacant or occupied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecrementBounds {
    pub p: f64,
    pub b: f64,
    pub bound_m2: f64,
    pub bound_m1_empty: f64,
    pub bound_m1_occupied: f64,
    pub target: f64,
    pub m2_ok: bool,
    pub m1_empty_ok: bool,
    pub m1_occupied_ok: bool,
    pub all_satisfied: bool,
}

/// Evaluates the three ratio bounds. Total over `0 < p <= 1`, `b > 0`; the
/// flags report which ratios sit at or below the target `2/(2+b)`.
pub fn decrement_bounds(params: RateParams) -> DecrementBounds {
    let (p, b) = (params.p(), params.b());
    let bound_m2 = 4.0 * p / (2.0 + 4.0 * p + 2.0 * p * b);
    let bound_m1_empty = 1.0 / (2.0 + b);
    let bound_m1_occupied = p * b / (1.0 + 2.0 * p * b);
    let target = 2.0 / (2.0 + b);
    let m2_ok = bound_m2 <= target;
    let m1_empty_ok = bound_m1_empty <= target;
    let m1_occupied_ok = bound_m1_occupied <= target;
    DecrementBounds {
        p,
        b,
        bound_m2,
        bound_m1_empty,
        bound_m1_occupied,
        target,
        m2_ok,
        m1_empty_ok,
        m1_occupied_ok,
        all_satisfied: m2_ok && m1_empty_ok && m1_occupied_ok,
    }
}

/// `gamma(v, b) = E v^{-Z} = (2v^2 + 2v + (b-2)/v) / (2+b)`.
///
/// Requires `v > 0` and `b > 2`; `gamma(1, b) = 1` exactly.
pub fn gamma(v: f64, b: f64) -> f64 {
    debug_assert!(v > 0.0 && b > 2.0);
    (2.0 * v * v + 2.0 * v + (b - 2.0) / v) / (2.0 + b)
}

/// The largest root of `gamma(v, b) = 1/2` together with the residual check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSolution {
    pub b: f64,
    pub v_star: f64,
    pub gamma_at_root: f64,
}

/// Finds the largest root `v* >= 4` of `gamma(v, b) = 1/2` by bracketing
/// and bisection to relative width `1e-12`.
///
/// `gamma(., b)` is strictly unimodal on `(0, inf)` (it falls from the
/// `(b-2)/v` pole, dips, then grows like `2v^2`), so the largest root is the
/// unique up-crossing right of the dip. Errors when the function never
/// reaches `1/2` at or above 4.
pub fn solve_v_star(b: f64) -> Result<GammaSolution, WidthError> {
    if b.is_nan() || b <= 2.0 {
        return Err(WidthError::BranchRateTooSmall(b));
    }
    // derivative numerator 4v + 2 - (b-2)/v^2 is increasing; bisect its root
    let deriv = |v: f64| 4.0 * v + 2.0 - (b - 2.0) / (v * v);
    let mut hi = 1.0;
    while deriv(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    if deriv(lo) > 0.0 {
        lo = 1e-12;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let dip = 0.5 * (lo + hi);

    // the up-crossing can only sit right of both the dip and 4
    let anchor = if dip > 4.0 { dip } else { 4.0 };
    if gamma(anchor, b) > 0.5 {
        return Err(WidthError::NoRootAtLeastFour(b));
    }
    let mut hi = anchor.max(4.0);
    while gamma(hi, b) <= 0.5 {
        hi *= 2.0;
        if hi > 1e100 {
            return Err(WidthError::NoRootAtLeastFour(b));
        }
    }
    let mut lo = anchor;
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if gamma(mid, b) <= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v_star = 0.5 * (lo + hi);
    if v_star < 4.0 {
        return Err(WidthError::NoRootAtLeastFour(b));
    }
    Ok(GammaSolution {
        b,
        v_star,
        gamma_at_root: gamma(v_star, b),
    })
}

/// Tail bound `4^(2-w0) * 2^(1-n)` on the number of returns of the
/// width-increment walk to level 2, started from width `w0`.
pub fn hitting_tail_bound(w0: u64, n: u64) -> f64 {
    debug_assert!(w0 >= 2 && n >= 1);
    libm::pow(4.0, 2.0 - w0 as f64) * libm::pow(2.0, 1.0 - n as f64)
}

/// `1/(20 b)`: the target constant of the separation-count bound.
pub fn constant_c(b: f64) -> f64 {
    debug_assert!(b > 0.0);
    1.0 / (20.0 * b)
}

/// `C(b) - 128/(2 + b^2)`: the headroom the induction step has to cover.
pub fn induction_target(b: f64) -> f64 {
    constant_c(b) - 128.0 / (2.0 + b * b)
}

/// Result of the elementary convolution-sum bound at one `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumBound {
    pub u: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `sum_{x=1}^{u-1} 1/(x^2 (u-x)^2) <= 6/u^2` for an integer
/// `u >= 2`, accumulating with Kahan compensation since the terms span many
/// orders of magnitude.
pub fn sum_bound_check(u: u64) -> SumBound {
    assert!(u >= 2, "sum bound is stated for u >= 2");
    let uf = u as f64;
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in 1..u {
        let xf = x as f64;
        let term = 1.0 / (xf * xf * (uf - xf) * (uf - xf));
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    let rhs = 6.0 / (uf * uf);
    SumBound {
        u,
        lhs: sum,
        rhs,
        holds: sum <= rhs,
    }
}

/// One threshold row of the empirical CDF comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfRow {
    pub threshold: i64,
    pub cdf_v: f64,
    pub cdf_z: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Outcome of the empirical stochastic-domination check.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub p: f64,
    pub b: f64,
    pub n: usize,
    pub trials: usize,
    /// Trials that hit the internal event safety cap before observing `n`
    /// width changes or a cutoff; excluded from the statistics.
    pub censored: usize,
    /// One row per integer threshold between the extreme observed sums.
    pub rows: Vec<CdfRow>,
    /// Count of observed pre-cutoff increments (the denominators below).
    pub pre_cutoff_steps: u64,
    /// Frequencies of -2 and -1 among pre-cutoff increments.
    pub freq_minus2: f64,
    pub freq_minus1: f64,
    /// The target `2/(2+b)` and the binomial standard error at that target.
    pub bound: f64,
    pub freq_se: f64,
    pub freq_minus2_pass: bool,
    pub freq_minus1_pass: bool,
    pub cdf_pass: bool,
    pub all_pass: bool,
}

/// Per-trial event safety cap; a trial that cannot produce `n` width
/// changes within this budget is reported as censored.
const DOMINATION_EVENT_CAP: u64 = 10_000_000;

/// Simulates `trials` trajectories and compares the n-step width-increment
/// sums against independent sums of the three-point law.
///
/// Each trial observes width-change increments until the cutoff (extinction
/// or a drop below -2); at and past the cutoff the increments are replaced
/// by draws from the law itself. The one-sided empirical CDF inequality
/// `P{sum V <= x} <= P{sum Z <= x} + slack` is checked at every integer
/// threshold with a 99% one-sided DKW slack of
/// `sqrt(ln(100) / (2 trials))` per empirical CDF. Pre-cutoff frequencies
/// of -2 and -1 are compared against `2/(2+b)` plus three standard errors.
///
/// Trial `t` consumes stream `derive(master_seed, 2t)`; its matching `Z`
/// sum consumes `derive(master_seed, 2t + 1)`.
pub fn domination_test(
    initial: &SiteConfiguration,
    rate_params: RateParams,
    n: usize,
    trials: usize,
    master_seed: u64,
) -> Result<DominationReport, WidthError> {
    if trials == 0 || n == 0 {
        return Err(WidthError::EmptyTest);
    }
    let b = rate_params.b();
    if b.is_nan() || b <= 2.0 {
        return Err(WidthError::BranchRateTooSmall(b));
    }

    let mut v_sums = Vec::with_capacity(trials);
    let mut z_sums = Vec::with_capacity(trials);
    let mut censored = 0usize;
    let mut pre_cutoff_steps = 0u64;
    let mut minus2 = 0u64;
    let mut minus1 = 0u64;

    for t in 0..trials {
        let mut rng = Rng::derive(master_seed, 2 * t as u64);
        let mut sim = Simulation::new(initial, rate_params);
        let mut w_prev = sim.width();
        let mut observed: Vec<i64> = Vec::with_capacity(n);
        let mut cut = false;
        let mut events = 0u64;
        while observed.len() < n && !cut {
            if sim.advance(&mut rng).is_none() {
                // only reachable from an empty start
                cut = true;
                break;
            }
            events += 1;
            if events > DOMINATION_EVENT_CAP {
                break;
            }
            let w = sim.width();
            if w == w_prev {
                continue;
            }
            let v = w as i64 - w_prev as i64;
            if w == 0 || v <= -3 {
                cut = true;
            } else {
                observed.push(v);
                w_prev = w;
            }
        }
        if observed.len() < n && !cut {
            censored += 1;
            continue;
        }
        let mut sum: i64 = 0;
        for &v in &observed {
            sum += v;
            pre_cutoff_steps += 1;
            match v {
                -2 => minus2 += 1,
                -1 => minus1 += 1,
                _ => {}
            }
        }
        for _ in observed.len()..n {
            sum += sample_z(b, &mut rng).expect("b > 2 checked above");
        }
        v_sums.push(sum);

        let mut zrng = Rng::derive(master_seed, 2 * t as u64 + 1);
        let mut zsum: i64 = 0;
        for _ in 0..n {
            zsum += sample_z(b, &mut zrng).expect("b > 2 checked above");
        }
        z_sums.push(zsum);
    }

    let kept = v_sums.len();
    if kept == 0 {
        return Err(WidthError::EmptyTest);
    }

    // one-sided 99% DKW slack for each empirical CDF
    let eps = libm::sqrt(libm::log(100.0) / (2.0 * kept as f64));
    let slack = 2.0 * eps;
    let lo = *v_sums.iter().chain(z_sums.iter()).min().expect("nonempty");
    let hi = *v_sums.iter().chain(z_sums.iter()).max().expect("nonempty");
    let mut rows = Vec::with_capacity((hi - lo + 1) as usize);
    let mut cdf_pass = true;
    for x in lo..=hi {
        let cdf_v = v_sums.iter().filter(|&&s| s <= x).count() as f64 / kept as f64;
        let cdf_z = z_sums.iter().filter(|&&s| s <= x).count() as f64 / kept as f64;
        let pass = cdf_v <= cdf_z + slack;
        cdf_pass &= pass;
        rows.push(CdfRow {
            threshold: x,
            cdf_v,
            cdf_z,
            slack,
            pass,
        });
    }

    let bound = 2.0 / (2.0 + b);
    let denom = pre_cutoff_steps.max(1) as f64;
    let freq_minus2 = minus2 as f64 / denom;
    let freq_minus1 = minus1 as f64 / denom;
    let freq_se = libm::sqrt(bound * (1.0 - bound) / denom);
    let freq_minus2_pass = freq_minus2 <= bound + 3.0 * freq_se;
    let freq_minus1_pass = freq_minus1 <= bound + 3.0 * freq_se;

    Ok(DominationReport {
        p: rate_params.p(),
        b,
        n,
        trials,
        censored,
        rows,
        pre_cutoff_steps,
        freq_minus2,
        freq_minus1,
        bound,
        freq_se,
        freq_minus2_pass,
        freq_minus1_pass,
        cdf_pass,
        all_pass: cdf_pass && freq_minus2_pass && freq_minus1_pass && censored == 0,
    })
}
