//! Exact continuous-time simulation of the double branching annihilating
//! random walk (DBARW) on `Z` with nearest-neighbor dependent rates, plus
//! the analytics needed to check its width-growth and survival machinery
//! numerically.
//!
//! Particles hop to nearest neighbors and branch two offspring onto both
//! neighbor sites; occupancies are 0-1 and coinciding particles annihilate
//! pairwise, so the total particle count is conserved modulo 2. A move that
//! affects an occupied neighbor runs at a reduced rate: hops slow from `1`
//! to `p`, branchings from `b` to `p*b`.
//!
//! The crate is organized around six concerns:
//!
//! - [`lattice`]: configurations, the three transition kinds and their exact
//!   rates, widths, and the height (swapping-voter) bijection.
//! - [`rng`]: a small deterministic PRNG with reproducible per-trial streams.
//! - [`engine`]: the event-driven simulator with localized rate maintenance,
//!   trajectory recording, and the embedded width chain.
//! - [`width`]: the three-point width-increment law, its generating function
//!   and root, decrement-rate bounds, and the stochastic domination test.
//! - [`separation`]: gap detection and the two-subprocess coupling used to
//!   certify permanent separations.
//! - [`experiments`]: Monte Carlo survival estimation, phase sweeps, and an
//!   exact width-truncated absorption oracle.
//!
//! Everything here is pure computation over caller-owned state: no IO, no
//! global state, no internal threading. The companion `dbarw-cli` crate
//! carries the command-line interface and file formats.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod engine;
pub mod experiments;
pub mod lattice;
pub mod rng;
pub mod separation;
pub mod width;

pub use engine::{EmbeddedWidthChain, SimParams, Simulation, Status, Trajectory};
pub use lattice::{EventKind, HeightConfiguration, LocalEvent, RateParams, SiteConfiguration};
pub use rng::Rng;
