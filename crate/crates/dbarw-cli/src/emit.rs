//! Artifact writers: float formatting, output-path resolution, and the
//! text/CSV/JSON encodings of every report type.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use dbarw_core::engine::{EmbeddedWidthChain, SimParams, Trajectory};
use dbarw_core::experiments::{OracleMcReport, OracleModel, PhasePoint, SurvivalEstimate};
use dbarw_core::lattice::{RateParams, SiteConfiguration};
use dbarw_core::separation::{LabeledTrajectory, SeparationStatus, SeparationVerdict};
use dbarw_core::width::{DecrementBounds, DominationReport, GammaSolution};
use serde_json::json;

/// Every float in CSV-like output carries 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Resolves the output target: relative paths land under `DBARW_OUT_DIR`
/// when that variable is set.
pub fn resolve_out_path(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var("DBARW_OUT_DIR") {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(path);
            }
        }
    }
    path.to_path_buf()
}

/// Writes `content` to the resolved path, or stdout when no path is given.
pub fn write_artifact(path: Option<&Path>, content: &str) -> io::Result<()> {
    match path {
        Some(p) => {
            let resolved = resolve_out_path(p);
            let mut file = File::create(&resolved)?;
            file.write_all(content.as_bytes())?;
            file.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(content.as_bytes())?;
            lock.flush()
        }
    }
}

fn params_header(p: RateParams, sp: SimParams, initial: &SiteConfiguration) -> String {
    format!(
        "# dbarw p={} b={} seed={} max_events={} max_time={} width_cap={} initial={}",
        p.p(),
        p.b(),
        sp.seed,
        sp.max_events,
        sp.max_time,
        sp.width_cap,
        initial
    )
}

/// Trajectory dump: header, one `time kind site width_after` line per
/// record, and a status footer.
pub fn trajectory_dump(traj: &Trajectory, params: RateParams, sp: SimParams) -> String {
    let mut out = params_header(params, sp, &traj.initial);
    out.push('\n');
    for rec in &traj.records {
        out.push_str(&format!(
            "{} {} {} {}\n",
            fmt_f64(rec.time),
            rec.event.kind.tag(),
            rec.event.site,
            rec.width_after
        ));
    }
    out.push_str(&format!(
        "# status={} events={} final={}\n",
        traj.status.name(),
        traj.records.len(),
        traj.final_config
    ));
    out
}

pub fn trajectory_json(traj: &Trajectory, params: RateParams, sp: SimParams) -> String {
    let records: Vec<_> = traj
        .records
        .iter()
        .map(|r| {
            json!({
                "time": r.time,
                "kind": r.event.kind.tag().to_string(),
                "site": r.event.site,
                "width_after": r.width_after,
            })
        })
        .collect();
    let value = json!({
        "p": params.p(),
        "b": params.b(),
        "seed": sp.seed,
        "initial": traj.initial.to_string(),
        "records": records,
        "status": traj.status.name(),
        "final": traj.final_config.to_string(),
    });
    format!("{value:#}\n")
}

/// Width-chain CSV: `n,tau,w,v,cutoff` with the cutoff entry flagged.
pub fn width_chain_csv(chain: &EmbeddedWidthChain) -> String {
    let mut out = String::from("n,tau,w,v,cutoff\n");
    for (k, e) in chain.entries.iter().enumerate() {
        let cut = chain.cutoff_n == Some(k + 1);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            k + 1,
            fmt_f64(e.tau),
            e.w,
            e.v,
            u8::from(cut)
        ));
    }
    out
}

pub fn width_chain_json(chain: &EmbeddedWidthChain) -> String {
    let entries: Vec<_> = chain
        .entries
        .iter()
        .map(|e| json!({"tau": e.tau, "w": e.w, "v": e.v}))
        .collect();
    let value = json!({
        "entries": entries,
        "cutoff_n": chain.cutoff_n,
    });
    format!("{value:#}\n")
}

pub const SURVIVAL_CSV_HEADER: &str = "p,b,trials,extinct,survived,censored,point,ci_low,ci_high";

pub fn survival_csv_row(p: f64, b: f64, e: &SurvivalEstimate) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        fmt_f64(p),
        fmt_f64(b),
        e.trials,
        e.extinct,
        e.survived,
        e.censored,
        fmt_f64(e.point),
        fmt_f64(e.ci_low),
        fmt_f64(e.ci_high)
    )
}

pub fn survival_csv(p: f64, b: f64, e: &SurvivalEstimate) -> String {
    format!("{SURVIVAL_CSV_HEADER}\n{}\n", survival_csv_row(p, b, e))
}

pub fn survival_json_value(p: f64, b: f64, e: &SurvivalEstimate) -> serde_json::Value {
    json!({
        "p": p,
        "b": b,
        "trials": e.trials,
        "extinct": e.extinct,
        "survived": e.survived,
        "censored": e.censored,
        "point": e.point,
        "ci_low": e.ci_low,
        "ci_high": e.ci_high,
    })
}

pub fn survival_json(p: f64, b: f64, e: &SurvivalEstimate) -> String {
    format!("{:#}\n", survival_json_value(p, b, e))
}

pub fn sweep_csv(points: &[PhasePoint]) -> String {
    let mut out = String::from(SURVIVAL_CSV_HEADER);
    out.push('\n');
    for pt in points {
        out.push_str(&survival_csv_row(pt.p, pt.b, &pt.estimate));
        out.push('\n');
    }
    out
}

pub fn sweep_json(points: &[PhasePoint]) -> String {
    let rows: Vec<_> = points
        .iter()
        .map(|pt| survival_json_value(pt.p, pt.b, &pt.estimate))
        .collect();
    format!("{:#}\n", serde_json::Value::Array(rows))
}

/// Domination CDF table: `threshold,cdf_v,cdf_z,slack,pass`.
pub fn domination_csv(report: &DominationReport) -> String {
    let mut out = String::from("threshold,cdf_v,cdf_z,slack,pass\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.threshold,
            fmt_f64(row.cdf_v),
            fmt_f64(row.cdf_z),
            fmt_f64(row.slack),
            u8::from(row.pass)
        ));
    }
    out
}

pub fn domination_json(report: &DominationReport) -> String {
    let rows: Vec<_> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "threshold": r.threshold,
                "cdf_v": r.cdf_v,
                "cdf_z": r.cdf_z,
                "slack": r.slack,
                "pass": r.pass,
            })
        })
        .collect();
    let value = json!({
        "p": report.p,
        "b": report.b,
        "n": report.n,
        "trials": report.trials,
        "censored": report.censored,
        "pre_cutoff_steps": report.pre_cutoff_steps,
        "freq_minus2": report.freq_minus2,
        "freq_minus1": report.freq_minus1,
        "bound": report.bound,
        "freq_se": report.freq_se,
        "freq_minus2_pass": report.freq_minus2_pass,
        "freq_minus1_pass": report.freq_minus1_pass,
        "cdf_pass": report.cdf_pass,
        "all_pass": report.all_pass,
        "cdf": rows,
    });
    format!("{value:#}\n")
}

fn verdict_name(v: &SeparationVerdict) -> &'static str {
    match v.status {
        SeparationStatus::Separated => "Separated",
        SeparationStatus::Met => "Met",
        SeparationStatus::Censored => "Censored",
    }
}

/// Labeled dump adds the group column: `time kind site group width_after`.
pub fn labeled_dump(
    traj: &LabeledTrajectory,
    verdict: &SeparationVerdict,
    params: RateParams,
    sp: SimParams,
) -> String {
    let mut out = format!(
        "# dbarw p={} b={} seed={} max_events={} max_time={} width_cap={} group1={} group2={}",
        params.p(),
        params.b(),
        sp.seed,
        sp.max_events,
        sp.max_time,
        sp.width_cap,
        traj.initial.group1(),
        traj.initial.group2()
    );
    out.push('\n');
    for rec in &traj.records {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            fmt_f64(rec.time),
            rec.event.kind.tag(),
            rec.event.site,
            rec.label.tag(),
            rec.width_after
        ));
    }
    out.push_str(&format!(
        "# status={} verdict={} first_meeting_time={}\n",
        traj.status.name(),
        verdict_name(verdict),
        verdict
            .first_meeting_time
            .map(fmt_f64)
            .unwrap_or_else(|| "none".into())
    ));
    out
}

pub fn labeled_json(
    traj: &LabeledTrajectory,
    verdict: &SeparationVerdict,
    params: RateParams,
    sp: SimParams,
) -> String {
    let records: Vec<_> = traj
        .records
        .iter()
        .map(|r| {
            json!({
                "time": r.time,
                "kind": r.event.kind.tag().to_string(),
                "site": r.event.site,
                "group": r.label.tag(),
                "width_after": r.width_after,
            })
        })
        .collect();
    let value = json!({
        "p": params.p(),
        "b": params.b(),
        "seed": sp.seed,
        "group1": traj.initial.group1().to_string(),
        "group2": traj.initial.group2().to_string(),
        "records": records,
        "status": traj.status.name(),
        "verdict": verdict_name(verdict),
        "first_meeting_time": verdict.first_meeting_time,
        "final": traj.final_config.to_string(),
    });
    format!("{value:#}\n")
}

/// Oracle state table: `state_id,config,absorption`.
pub fn oracle_csv(oracle: &OracleModel) -> String {
    let mut out = String::from("state_id,config,absorption\n");
    for (i, (state, a)) in oracle.states().iter().zip(oracle.absorption()).enumerate() {
        out.push_str(&format!("{},\"{}\",{}\n", i, state, fmt_f64(*a)));
    }
    out
}

pub fn oracle_json(oracle: &OracleModel) -> String {
    let states: Vec<_> = oracle
        .states()
        .iter()
        .zip(oracle.absorption())
        .enumerate()
        .map(|(i, (state, a))| json!({"state_id": i, "config": state.to_string(), "absorption": a}))
        .collect();
    let value = json!({
        "window": oracle.window(),
        "p": oracle.params().p(),
        "b": oracle.params().b(),
        "residual": oracle.residual(),
        "states": states,
    });
    format!("{value:#}\n")
}

pub fn oracle_compare_json(report: &OracleMcReport, params: RateParams) -> String {
    let value = json!({
        "window": report.window,
        "p": params.p(),
        "b": params.b(),
        "oracle_absorption": report.oracle_absorption,
        "trials": report.trials,
        "extinct": report.extinct,
        "survived": report.survived,
        "censored": report.censored,
        "mc_extinction": report.mc_extinction,
        "ci_low": report.ci_low,
        "ci_high": report.ci_high,
        "agrees": report.agrees,
    });
    format!("{value:#}\n")
}

pub fn oracle_compare_csv(report: &OracleMcReport, params: RateParams) -> String {
    let mut out = String::from(
        "window,p,b,oracle_absorption,trials,extinct,survived,censored,mc_extinction,ci_low,ci_high,agrees\n",
    );
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}\n",
        report.window,
        fmt_f64(params.p()),
        fmt_f64(params.b()),
        fmt_f64(report.oracle_absorption),
        report.trials,
        report.extinct,
        report.survived,
        report.censored,
        fmt_f64(report.mc_extinction),
        fmt_f64(report.ci_low),
        fmt_f64(report.ci_high),
        u8::from(report.agrees)
    ));
    out
}

pub fn gamma_json(sol: &GammaSolution) -> String {
    let value = json!({
        "b": sol.b,
        "v_star": sol.v_star,
        "gamma_at_root": sol.gamma_at_root,
    });
    format!("{value:#}\n")
}

pub fn gamma_csv(sol: &GammaSolution) -> String {
    format!(
        "b,v_star,gamma_at_root\n{},{},{}\n",
        fmt_f64(sol.b),
        fmt_f64(sol.v_star),
        fmt_f64(sol.gamma_at_root)
    )
}

pub fn bounds_json(db: &DecrementBounds) -> String {
    let value = json!({
        "p": db.p,
        "b": db.b,
        "bound_m2": db.bound_m2,
        "bound_m1_empty": db.bound_m1_empty,
        "bound_m1_occupied": db.bound_m1_occupied,
        "target": db.target,
        "m2_ok": db.m2_ok,
        "m1_empty_ok": db.m1_empty_ok,
        "m1_occupied_ok": db.m1_occupied_ok,
        "all_satisfied": db.all_satisfied,
    });
    format!("{value:#}\n")
}

pub fn bounds_csv(db: &DecrementBounds) -> String {
    format!(
        "p,b,bound_m2,bound_m1_empty,bound_m1_occupied,target,all_satisfied\n{},{},{},{},{},{},{}\n",
        fmt_f64(db.p),
        fmt_f64(db.b),
        fmt_f64(db.bound_m2),
        fmt_f64(db.bound_m1_empty),
        fmt_f64(db.bound_m1_occupied),
        fmt_f64(db.target),
        u8::from(db.all_satisfied)
    )
}
