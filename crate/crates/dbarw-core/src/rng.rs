//! Deterministic pseudo-random streams for reproducible trials.
//!
//! A single 64-bit master seed drives everything. Independent per-trial
//! streams come from [`Rng::derive`], which mixes `(seed, index)` through
//! SplitMix64 before expanding to the xoshiro256++ state; the mixing is part
//! of the output contract, so identical `(seed, index)` pairs always replay
//! identical trials.
//!
//! Not cryptographic; purely for simulation.

/// SplitMix64 step: advances `state` and returns the next scrambled word.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed number `index` under a master seed: the SplitMix64 scramble of
/// `master XOR (index + 1) * 0x9E3779B97F4A7C15`.
///
/// This mixing is the documented contract for per-trial and per-cell
/// streams; anything that fans work out derives seeds through it so results
/// are reproducible regardless of scheduling.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut x = master ^ (index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    splitmix64(&mut x)
}

/// xoshiro256++ generator seeded via SplitMix64.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    /// Stream seeded directly from a 64-bit value.
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for w in &mut s {
            *w = splitmix64(&mut sm);
        }
        // the all-zero state is invalid for xoshiro
        if s == [0, 0, 0, 0] {
            s[0] = 0x9E37_79B9_7F4A_7C15;
        }
        Self { s }
    }

    /// Independent stream number `index` under `master`: `Rng::new` of
    /// [`mix_seed`]`(master, index)`.
    pub fn derive(master: u64, index: u64) -> Self {
        Self::new(mix_seed(master, index))
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        out
    }

    /// Uniform `f64` in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Exponential holding time with the given total `rate`.
    pub fn exp(&mut self, rate: f64) -> f64 {
        let u = self.next_f64();
        let u = if u == 0.0 { f64::MIN_POSITIVE } else { u };
        -libm::log(u) / rate
    }

    /// Uniform integer in `[0, n)` by rejection-free scaling (fine for the
    /// small `n` used in tests and shuffles).
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_f64() * n as f64) as u64).min(n - 1)
    }
}
