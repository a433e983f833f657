//! End-to-end checks of the binary and of report files.

use std::path::Path;
use std::process::Command;

use raring::experiment::{
    convergence_table, emit_report, load_report, run_scenario, ExperimentError, OutputFormat,
    RunOptions, ScenarioConfig, ScenarioKind,
};

fn raring(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_raring"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn run_writes_named_json_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(
        &cfg,
        r#"{"scenario": "statement_bound_sweep", "sweep_size": 5, "replications": 1000}"#,
    );
    let out_dir = dir.path().join("out");
    let out = raring(&[
        "run",
        cfg.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = load_report(&out_dir.join("statement_bound_sweep_seed7.json")).unwrap();
    assert_eq!(report.master_seed, 7);
    assert!(report.passed);
}

#[test]
fn invalid_config_exits_two_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(&cfg, r#"{"scenario": "eq6_identity", "replications": 0}"#);
    let out = raring(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replications"));

    let out = raring(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // far too few replications for a 1e-4 final tolerance
    write(
        &cfg,
        r#"{"scenario": "theorem1_geometric", "replications": 200, "tolerance": 0.0001}"#,
    );
    let out = raring(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_subcommands_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = raring(&[
        "gf-check", "--reps", "500", "--format", "csv", "--out", out_dir,
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let csv =
        std::fs::read_to_string(dir.path().join("gf_consistency_seed1_triangle_s0.5.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("ladder,probe,distance,stderr,pass")
    );

    let out = raring(&["mixing-check", "--reps", "500", "--out", out_dir]);
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    assert!(dir.path().join("mixing_zero_check_seed1.json").exists());

    let out = raring(&["bound-check", "--reps", "1000", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));

    let cfg = dir.path().join("t1.json");
    write(
        &cfg,
        r#"{"scenario": "theorem1_geometric", "replications": 2000}"#,
    );
    raring(&["run", cfg.to_str().unwrap(), "--out", out_dir]);
    let out = raring(&[
        "table",
        dir.path()
            .join("theorem1_geometric_seed1.json")
            .to_str()
            .unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("tv_to_poisson") && text.contains("decreasing"),
        "{text}"
    );

    let out = raring(&["run", cfg.to_str().unwrap(), "--format", "xml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        replications: 1000,
        ..ScenarioConfig::defaults(ScenarioKind::Eq6Identity)
    };
    let report = run_scenario(&cfg, &RunOptions::default()).unwrap();
    let paths = emit_report(&report, OutputFormat::Json, dir.path()).unwrap();
    assert_eq!(paths.len(), 1);
    assert_eq!(load_report(&paths[0]).unwrap(), report);
    assert!(report
        .coverage
        .iter()
        .any(|c| c.module == "mutual_interaction"));
    assert!(report
        .tables
        .iter()
        .all(|t| t.rows.iter().all(|r| (0.0..=1.0).contains(&r.distance))));
}

#[test]
fn theorem1_ladder_table_and_single_point_rejection() {
    let cfg = ScenarioConfig {
        replications: 5000,
        ..ScenarioConfig::defaults(ScenarioKind::Theorem1Geometric)
    };
    let report = run_scenario(&cfg, &RunOptions::default()).unwrap();
    let tables = convergence_table(&report).unwrap();
    assert_eq!(tables[0].ladder, vec![10.0, 100.0, 1000.0]);
    assert_eq!(tables[0].probes, vec![2.0]);

    let single = ScenarioConfig {
        ladder: vec![100.0],
        ..cfg
    };
    let report = run_scenario(&single, &RunOptions::default()).unwrap();
    assert!(matches!(
        convergence_table(&report),
        Err(ExperimentError::Table(_))
    ));
}

#[test]
fn identical_ladder_points_agree_within_stderr() {
    // replications are seeded by index only, so repeating a ladder value
    // reproduces the same distance exactly
    let cfg = ScenarioConfig {
        replications: 5000,
        ladder: vec![100.0, 100.000001],
        ..ScenarioConfig::defaults(ScenarioKind::Theorem1Geometric)
    };
    let report = run_scenario(&cfg, &RunOptions::default()).unwrap();
    let rows = &report.tables[0].rows;
    assert!((rows[0].distance - rows[1].distance).abs() <= rows[0].stderr + rows[1].stderr);
}

#[test]
fn runtime_cap_flags_incomplete_report() {
    let cfg = ScenarioConfig::defaults(ScenarioKind::Theorem1Geometric);
    let opts = RunOptions {
        runtime_cap_secs: 1e-9,
        ..RunOptions::default()
    };
    let report = run_scenario(&cfg, &opts).unwrap();
    assert!(!report.complete);
    assert!(!report.passed);
}
