//! Command-line surface: subcommands, shared flag groups, and the grid
//! grammar.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "dbarw",
    version,
    about = "Exact simulator and verification tools for the double branching \
             annihilating random walk with nearest-neighbor dependent rates",
    after_help = "All randomness derives from --seed; repeating an invocation \
                  with the same flags produces byte-identical output. When \
                  DBARW_OUT_DIR is set, relative --out paths are placed there.\n\
                  Exit codes: 0 success, 2 usage error, 3 runtime error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trajectory and dump every event.
    Simulate(SimulateArgs),
    /// Estimate the survival probability by independent trials.
    Survival(SurvivalArgs),
    /// Sweep the (p, b) plane and emit one survival row per cell.
    Sweep(SweepArgs),
    /// Run one trajectory and emit its embedded width chain.
    WidthChain(SimulateArgs),
    /// Compare width-increment sums against the three-point law.
    Domination(DominationArgs),
    /// Split a configuration at a gap and run the coupled subprocesses.
    Separation(SeparationArgs),
    /// Exact extinction probabilities of the width-truncated chain.
    Oracle(OracleArgs),
    /// Solve gamma(v, b) = 1/2 for the largest root v* >= 4.
    Gamma(GammaArgs),
    /// Evaluate the decrement-rate bounds against 2/(2+b).
    Bounds(BoundsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted. Relative paths resolve under
    /// DBARW_OUT_DIR when that variable is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format (each command has a natural default).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Annihilation-interaction factor, 0 < p <= 1.
    #[arg(long)]
    pub p: f64,
    /// Branching intensity, b > 0.
    #[arg(long)]
    pub b: f64,
}

#[derive(Debug, Args)]
pub struct CapArgs {
    /// Event budget per run.
    #[arg(long, default_value_t = 100_000)]
    pub max_events: u64,
    /// Model-time horizon per run (infinite by default).
    #[arg(long, default_value_t = f64::INFINITY)]
    pub max_time: f64,
    /// Stop a run once its width reaches this value (0 disables).
    #[arg(long, default_value_t = 0)]
    pub width_cap: u64,
}

#[derive(Debug, Args)]
pub struct InitArg {
    /// Initial configuration: whitespace-separated occupied sites.
    #[arg(long, default_value = "0 1", allow_hyphen_values = true)]
    pub init: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub init: InitArg,
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub caps: CapArgs,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SurvivalArgs {
    #[command(flatten)]
    pub init: InitArg,
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub caps: CapArgs,
    /// Number of independent trials.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Worker threads (0 = all cores); never affects the output bytes.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Master seed; trial t uses the derived stream mix_seed(seed, t).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// p grid as lo:hi:log|lin:count.
    #[arg(long)]
    pub p: String,
    /// b grid as lo:hi:log|lin:count.
    #[arg(long)]
    pub b: String,
    #[command(flatten)]
    pub init: InitArg,
    #[command(flatten)]
    pub caps: CapArgs,
    /// Trials per grid cell.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Worker threads (0 = all cores); never affects the output bytes.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Master seed; cell c estimates under mix_seed(seed, c).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DominationArgs {
    #[command(flatten)]
    pub init: InitArg,
    #[command(flatten)]
    pub rates: RateArgs,
    /// Number of width-chain steps summed per trial.
    #[arg(long, default_value_t = 25)]
    pub n: usize,
    /// Number of trajectory/Z-sum pairs.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SeparationArgs {
    #[command(flatten)]
    pub init: InitArg,
    /// Gap offset (from the leftmost particle) to split at.
    #[arg(long)]
    pub gap: u64,
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub caps: CapArgs,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Window width L (2..=14): states are truncated at width L.
    #[arg(long)]
    pub window: u64,
    #[command(flatten)]
    pub rates: RateArgs,
    /// When positive, also run a Monte Carlo comparison with this many
    /// trials and emit the agreement report instead of the state table.
    #[arg(long, default_value_t = 0)]
    pub compare_trials: u64,
    #[command(flatten)]
    pub init: InitArg,
    #[command(flatten)]
    pub caps: CapArgs,
    /// Master seed for the comparison trials.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    /// Branching intensity, b > 2.
    #[arg(long)]
    pub b: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses the grid grammar `lo:hi:log|lin:count`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, scale, count] = parts.as_slice() else {
        return Err(format!("grid {spec:?} must be lo:hi:log|lin:count"));
    };
    let lo: f64 = lo.parse().map_err(|_| format!("bad grid bound {lo:?}"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad grid bound {hi:?}"))?;
    let count: usize = count
        .parse()
        .map_err(|_| format!("bad grid count {count:?}"))?;
    if count == 0 {
        return Err("grid count must be at least 1".into());
    }
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(format!("grid bounds must satisfy lo <= hi, got {lo}:{hi}"));
    }
    let values = match *scale {
        "lin" => (0..count)
            .map(|i| {
                if count == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
        "log" => {
            if lo <= 0.0 {
                return Err("log grids need positive bounds".into());
            }
            let (llo, lhi) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| {
                    if count == 1 {
                        lo
                    } else {
                        (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
        other => return Err(format!("grid scale must be log or lin, got {other:?}")),
    };
    Ok(values)
}
