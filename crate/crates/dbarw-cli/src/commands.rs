//! Command dispatch: validates flags against the target operation's
//! preconditions, fans trials out over the worker pool, and emits the
//! artifact.

use std::path::Path;

use dbarw_core::engine::{extract_width_chain, simulate, EngineError, SimParams};
use dbarw_core::experiments::{
    build_oracle, compare_oracle_mc, summarize_survival, survival_trial, ExperimentsError,
    PhasePoint, SurvivalEstimate, TrialClass,
};
use dbarw_core::lattice::{LatticeError, RateParams, SiteConfiguration};
use dbarw_core::rng::mix_seed;
use dbarw_core::separation::{simulate_labeled, split_at_gap, SeparationError};
use dbarw_core::width::{decrement_bounds, domination_test, solve_v_star, WidthError};
use rayon::prelude::*;

use crate::args::{
    parse_grid, BoundsArgs, CapArgs, Cli, Command, DominationArgs, Format, GammaArgs, OracleArgs,
    OutputArgs, RateArgs, SeparationArgs, SimulateArgs, SurvivalArgs, SweepArgs,
};
use crate::emit;

/// Usage problems exit with 2, runtime failures with 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io: {e}"))
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<WidthError> for CliError {
    fn from(e: WidthError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SeparationError> for CliError {
    fn from(e: SeparationError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ExperimentsError> for CliError {
    fn from(e: ExperimentsError) -> Self {
        match e {
            ExperimentsError::ResidualTooLarge(_) => CliError::Runtime(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn parse_init(init: &str) -> Result<SiteConfiguration, CliError> {
    init.parse::<SiteConfiguration>()
        .map_err(|e| CliError::Usage(format!("--init: {e}")))
}

fn rate_params(args: &RateArgs) -> Result<RateParams, CliError> {
    Ok(RateParams::new(args.p, args.b)?)
}

fn sim_params(seed: u64, caps: &CapArgs) -> Result<SimParams, CliError> {
    Ok(SimParams::new(
        seed,
        caps.max_events,
        caps.max_time,
        caps.width_cap,
    )?)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

fn emit_out(output: &OutputArgs, content: &str) -> Result<(), CliError> {
    emit::write_artifact(output.out.as_deref().map(Path::new), content)?;
    Ok(())
}

fn format_or(output: &OutputArgs, default: Format) -> Format {
    output.format.unwrap_or(default)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::WidthChain(args) => cmd_width_chain(args),
        Command::Survival(args) => cmd_survival(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Domination(args) => cmd_domination(args),
        Command::Separation(args) => cmd_separation(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Gamma(args) => cmd_gamma(args),
        Command::Bounds(args) => cmd_bounds(args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let initial = parse_init(&args.init.init)?;
    let params = rate_params(&args.rates)?;
    let sp = sim_params(args.seed, &args.caps)?;
    let traj = simulate(&initial, params, sp)?;
    let content = match format_or(&args.output, Format::Csv) {
        Format::Csv => emit::trajectory_dump(&traj, params, sp),
        Format::Json => emit::trajectory_json(&traj, params, sp),
    };
    emit_out(&args.output, &content)
}

fn cmd_width_chain(args: SimulateArgs) -> Result<(), CliError> {
    let initial = parse_init(&args.init.init)?;
    let params = rate_params(&args.rates)?;
    let sp = sim_params(args.seed, &args.caps)?;
    let traj = simulate(&initial, params, sp)?;
    let chain = extract_width_chain(&traj);
    let content = match format_or(&args.output, Format::Csv) {
        Format::Csv => emit::width_chain_csv(&chain),
        Format::Json => emit::width_chain_json(&chain),
    };
    emit_out(&args.output, &content)
}

/// Runs the trial ensemble on the worker pool; trial `t` always consumes
/// stream `mix_seed(master, t)`, so the counts are scheduling independent.
fn parallel_estimate(
    initial: &SiteConfiguration,
    params: RateParams,
    caps: SimParams,
    trials: u64,
    master: u64,
) -> Result<SurvivalEstimate, CliError> {
    if trials == 0 {
        return Err(ExperimentsError::ZeroTrials.into());
    }
    if initial.is_empty() {
        return Err(ExperimentsError::EmptyInitial.into());
    }
    let classes: Result<Vec<TrialClass>, EngineError> = (0..trials)
        .into_par_iter()
        .map(|t| survival_trial(initial, params, caps, master, t))
        .collect();
    let classes = classes?;
    let count = |class: TrialClass| classes.iter().filter(|&&c| c == class).count() as u64;
    Ok(summarize_survival(
        count(TrialClass::Extinct),
        count(TrialClass::Survived),
        count(TrialClass::Censored),
    ))
}

fn cmd_survival(args: SurvivalArgs) -> Result<(), CliError> {
    let initial = parse_init(&args.init.init)?;
    let params = rate_params(&args.rates)?;
    let caps = sim_params(args.seed, &args.caps)?;
    let pool = pool(args.jobs)?;
    let estimate =
        pool.install(|| parallel_estimate(&initial, params, caps, args.trials, args.seed))?;
    let content = match format_or(&args.output, Format::Csv) {
        Format::Csv => emit::survival_csv(params.p(), params.b(), &estimate),
        Format::Json => emit::survival_json(params.p(), params.b(), &estimate),
    };
    emit_out(&args.output, &content)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let p_grid = parse_grid(&args.p).map_err(CliError::Usage)?;
    let b_grid = parse_grid(&args.b).map_err(CliError::Usage)?;
    let initial = parse_init(&args.init.init)?;
    let caps = sim_params(args.seed, &args.caps)?;
    if args.trials == 0 {
        return Err(ExperimentsError::ZeroTrials.into());
    }
    // validate the whole grid before any work starts
    let mut cells = Vec::new();
    for (pi, &p) in p_grid.iter().enumerate() {
        for (bi, &b) in b_grid.iter().enumerate() {
            let cell = (pi * b_grid.len() + bi) as u64;
            cells.push((cell, RateParams::new(p, b)?));
        }
    }
    let pool = pool(args.jobs)?;
    let master = args.seed;
    let trials = args.trials;
    let points: Result<Vec<PhasePoint>, CliError> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(cell, params)| {
                let estimate =
                    parallel_estimate(&initial, params, caps, trials, mix_seed(master, cell))?;
                Ok(PhasePoint {
                    p: params.p(),
                    b: params.b(),
                    estimate,
                })
            })
            .collect()
    });
    let points = points?;
    let content = match format_or(&args.output, Format::Csv) {
        Format::Csv => emit::sweep_csv(&points),
        Format::Json => emit::sweep_json(&points),
    };
    emit_out(&args.output, &content)
}

fn cmd_domination(args: DominationArgs) -> Result<(), CliError> {
    let initial = parse_init(&args.init.init)?;
    let params = rate_params(&args.rates)?;
    if initial.is_empty() {
        return Err(ExperimentsError::EmptyInitial.into());
    }
    let report = domination_test(&initial, params, args.n, args.trials, args.seed)?;
    let content = match format_or(&args.output, Format::Json) {
        Format::Csv => emit::domination_csv(&report),
        Format::Json => emit::domination_json(&report),
    };
    emit_out(&args.output, &content)
}

fn cmd_separation(args: SeparationArgs) -> Result<(), CliError> {
    let initial = parse_init(&args.init.init)?;
    let params = rate_params(&args.rates)?;
    let sp = sim_params(args.seed, &args.caps)?;
    let labeled = split_at_gap(&initial, args.gap)?;
    let (traj, verdict) = simulate_labeled(&labeled, params, sp)?;
    let content = match format_or(&args.output, Format::Csv) {
        Format::Csv => emit::labeled_dump(&traj, &verdict, params, sp),
        Format::Json => emit::labeled_json(&traj, &verdict, params, sp),
    };
    emit_out(&args.output, &content)
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let params = rate_params(&args.rates)?;
    let oracle = build_oracle(args.window, params)?;
    let content = if args.compare_trials > 0 {
        let initial = parse_init(&args.init.init)?;
        let sp = sim_params(args.seed, &args.caps)?;
        let report = compare_oracle_mc(&oracle, &initial, sp, args.compare_trials)?;
        match format_or(&args.output, Format::Json) {
            Format::Csv => emit::oracle_compare_csv(&report, params),
            Format::Json => emit::oracle_compare_json(&report, params),
        }
    } else {
        match format_or(&args.output, Format::Csv) {
            Format::Csv => emit::oracle_csv(&oracle),
            Format::Json => emit::oracle_json(&oracle),
        }
    };
    emit_out(&args.output, &content)
}

fn cmd_gamma(args: GammaArgs) -> Result<(), CliError> {
    let sol = solve_v_star(args.b)?;
    let content = match format_or(&args.output, Format::Json) {
        Format::Csv => emit::gamma_csv(&sol),
        Format::Json => emit::gamma_json(&sol),
    };
    emit_out(&args.output, &content)
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let params = rate_params(&args.rates)?;
    let db = decrement_bounds(params);
    let content = match format_or(&args.output, Format::Json) {
        Format::Csv => emit::bounds_csv(&db),
        Format::Json => emit::bounds_json(&db),
    };
    emit_out(&args.output, &content)
}
