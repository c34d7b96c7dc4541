//! Exit codes, diagnostics, output formats, and path resolution of the
//! `dbarw` binary.

use std::process::{Command, Output};

fn dbarw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbarw"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_code(args: &[&str], code: i32) -> Output {
    let out = dbarw(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "args {args:?}: stderr {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn success_exit_zero() {
    assert_code(&["gamma", "--b", "20000"], 0);
    assert_code(&["bounds", "--p", "0.5", "--b", "3"], 0);
}

#[test]
fn usage_errors_exit_two() {
    // unknown command (clap)
    assert_code(&["frobnicate"], 2);
    // missing required flag (clap)
    assert_code(&["gamma"], 2);
    // semantic validation: p out of range
    let out = assert_code(&["simulate", "--p", "0", "--b", "1"], 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rate parameters"));
    // unparsable initial configuration
    let out = assert_code(&["simulate", "--init", "0 x", "--p", "0.5", "--b", "1"], 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--init"));
    // width cap of 1 is impossible
    assert_code(
        &["simulate", "--p", "0.5", "--b", "1", "--width-cap", "1"],
        2,
    );
    // malformed grid
    let out = assert_code(&["sweep", "--p", "1:2:geom:3", "--b", "1:2:lin:2"], 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("log or lin"));
    // gamma below the law's domain
    let out = assert_code(&["gamma", "--b", "2"], 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("b > 2"));
    // oracle window out of range
    assert_code(&["oracle", "--window", "20", "--p", "0.5", "--b", "1"], 2);
    // split offset that is not a gap
    assert_code(
        &[
            "separation",
            "--init",
            "0 1 4 5",
            "--gap",
            "1",
            "--p",
            "0.5",
            "--b",
            "1",
        ],
        2,
    );
}

#[test]
fn runtime_errors_exit_three() {
    let out = assert_code(
        &[
            "gamma",
            "--b",
            "20000",
            "--out",
            "/nonexistent-dir/xyz/gamma.json",
        ],
        3,
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("io:"));
}

#[test]
fn json_outputs_parse() {
    for args in [
        vec!["gamma", "--b", "15000"],
        vec!["bounds", "--p", "1e-8", "--b", "10000"],
        vec![
            "domination",
            "--p",
            "1e-6",
            "--b",
            "100",
            "--n",
            "3",
            "--trials",
            "100",
        ],
        vec![
            "survival",
            "--p",
            "1",
            "--b",
            "1",
            "--trials",
            "50",
            "--width-cap",
            "6",
            "--max-events",
            "1000",
            "--format",
            "json",
        ],
        vec![
            "oracle",
            "--window",
            "6",
            "--p",
            "1",
            "--b",
            "1",
            "--compare-trials",
            "500",
            "--max-events",
            "100000",
        ],
        vec![
            "separation",
            "--init",
            "0 1 4 5",
            "--gap",
            "2",
            "--p",
            "0.5",
            "--b",
            "1",
            "--max-events",
            "50",
            "--format",
            "json",
        ],
        vec![
            "simulate",
            "--p",
            "0.5",
            "--b",
            "1",
            "--max-events",
            "20",
            "--format",
            "json",
        ],
        vec![
            "width-chain",
            "--p",
            "0.5",
            "--b",
            "1",
            "--max-events",
            "50",
            "--format",
            "json",
        ],
    ] {
        let out = assert_code(&args, 0);
        let text = String::from_utf8(out.stdout).unwrap();
        serde_json::from_str::<serde_json::Value>(&text)
            .unwrap_or_else(|e| panic!("{args:?} produced invalid JSON: {e}\n{text}"));
    }
}

#[test]
fn sweep_csv_shape() {
    let out = assert_code(
        &[
            "sweep",
            "--p",
            "0.1:1:lin:2",
            "--b",
            "1:4:lin:3",
            "--trials",
            "20",
            "--max-events",
            "500",
            "--width-cap",
            "8",
            "--seed",
            "5",
        ],
        0,
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(
        lines[0],
        "p,b,trials,extinct,survived,censored,point,ci_low,ci_high"
    );
    assert_eq!(lines.len(), 1 + 2 * 3, "one row per grid cell");
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), 9);
    }
}

/// The CLI's parallel sweep reproduces the library's serial sweep exactly.
#[test]
fn cli_sweep_matches_library() {
    use dbarw_core::engine::SimParams;
    use dbarw_core::experiments::sweep_phase;
    use dbarw_core::lattice::SiteConfiguration;

    let out = assert_code(
        &[
            "sweep",
            "--p",
            "0.2:1:lin:3",
            "--b",
            "0.5:2:lin:2",
            "--trials",
            "40",
            "--max-events",
            "800",
            "--width-cap",
            "10",
            "--seed",
            "33",
            "--jobs",
            "3",
        ],
        0,
    );
    let cli_text = String::from_utf8(out.stdout).unwrap();

    let initial: SiteConfiguration = "0 1".parse().unwrap();
    let sp = SimParams::new(33, 800, f64::INFINITY, 10).unwrap();
    let p_grid = [0.2, 0.6, 1.0];
    let b_grid = [0.5, 2.0];
    let points = sweep_phase(&p_grid, &b_grid, &initial, sp, 40, 33).unwrap();
    for (row, pt) in cli_text.trim_end().lines().skip(1).zip(&points) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[2].parse::<u64>().unwrap(), pt.estimate.trials);
        assert_eq!(cols[3].parse::<u64>().unwrap(), pt.estimate.extinct);
        assert_eq!(cols[4].parse::<u64>().unwrap(), pt.estimate.survived);
        assert_eq!(cols[5].parse::<u64>().unwrap(), pt.estimate.censored);
    }
}

#[test]
fn out_dir_env_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dbarw"))
        .args(["gamma", "--b", "30000", "--out", "g.json"])
        .env("DBARW_OUT_DIR", dir.path())
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    let written = dir.path().join("g.json");
    assert!(written.exists(), "artifact must land under DBARW_OUT_DIR");
    let text = std::fs::read_to_string(written).unwrap();
    assert!(text.contains("v_star"));
}

#[test]
fn oracle_csv_table() {
    let out = assert_code(&["oracle", "--window", "4", "--p", "0.5", "--b", "2"], 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines[0], "state_id,config,absorption");
    // 2^(4-2) anchored states
    assert_eq!(lines.len(), 1 + 4);
    assert!(lines[1].starts_with("0,\"0 1\","));
}

#[test]
fn help_enumerates_flags() {
    let out = assert_code(&["survival", "--help"], 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in [
        "--init",
        "--p",
        "--b",
        "--max-events",
        "--max-time",
        "--width-cap",
        "--trials",
        "--jobs",
        "--seed",
        "--out",
        "--format",
    ] {
        assert!(text.contains(flag), "survival --help must document {flag}");
    }
}
