//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so that every criterion reports even
//! when an earlier one fails.

use std::time::{Duration, Instant};

use raring::dist::DistributionSpec;
use raring::experiment::{
    emit_report, run_scenario, ExperimentReport, GridSpec, OutputFormat, RunOptions,
    ScenarioConfig, ScenarioKind,
};
use raring::interaction::{mark, RecordSource};
use raring::raring::{beta_sequence, geometric_source, XiSource};
use raring::renewal::RenewalPath;
use raring::rng::{replication_rng, SUBSTREAM_PRIMARY};

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(cfg: &ScenarioConfig) -> (ExperimentReport, Duration) {
    let started = Instant::now();
    let report = run_scenario(cfg, &RunOptions::default()).expect("scenario runs");
    (report, started.elapsed())
}

fn check_value(report: &ExperimentReport, name: &str) -> (bool, f64) {
    let c = report
        .check(name)
        .unwrap_or_else(|| panic!("{} report lacks check {name}", report.scenario));
    (c.pass, c.value)
}

fn criteria_1_to_3() -> Vec<Outcome> {
    let cfg = ScenarioConfig::defaults(ScenarioKind::Theorem2PoissonExample);
    let (report, took) = run(&cfg);
    let (decreasing, _) = check_value(&report, "ks_decreasing_k1");
    let (final1_ok, final1) = check_value(&report, "ks_final_k1");
    let ladder: Vec<String> = report
        .table("mean_scaled_k1")
        .expect("k=1 table")
        .rows
        .iter()
        .map(|r| format!("{:.4}", r.distance))
        .collect();
    let c1 = Outcome {
        pass: report.complete && decreasing && final1_ok && took <= Duration::from_secs(300),
        detail: format!(
            "KS along lambda = 0.1, 0.01, 0.001: [{}], final {final1:.4} <= 0.02, {:.1}s",
            ladder.join(", "),
            took.as_secs_f64()
        ),
    };
    let (final3_ok, final3) = check_value(&report, "ks_final_k3");
    let c2 = Outcome {
        pass: report.complete && final3_ok,
        detail: format!("KS to Erlang(3, 1) at lambda = 0.001: {final3:.4} <= 0.03"),
    };

    let cfg = ScenarioConfig {
        h_law: DistributionSpec::exponential(2.0),
        k_values: vec![1],
        ..ScenarioConfig::defaults(ScenarioKind::Theorem2PoissonExample)
    };
    let (report, _) = run(&cfg);
    let (exactly_one, _) = check_value(&report, "scaling_exactly_one_k1");
    let named = report
        .notes
        .iter()
        .find(|n| n.starts_with("scaling winner k=1"))
        .cloned();
    let c3 = Outcome {
        pass: report.complete && exactly_one && named.is_some(),
        detail: named.unwrap_or_else(|| "no single winning scaling".into()),
    };
    vec![c1, c2, c3]
}

fn criterion_4() -> Outcome {
    let (report, took) = run(&ScenarioConfig::defaults(ScenarioKind::Theorem1Geometric));
    let (decreasing, _) = check_value(&report, "tv_decreasing_t2");
    let (final_ok, last) = check_value(&report, "tv_final_t2");
    let ladder: Vec<String> = report.tables[0]
        .rows
        .iter()
        .map(|r| format!("{:.4}", r.distance))
        .collect();
    Outcome {
        pass: report.complete && decreasing && final_ok && took <= Duration::from_secs(180),
        detail: format!(
            "TV along c = 10, 100, 1000: [{}], final {last:.4} <= 0.02, {:.1}s",
            ladder.join(", "),
            took.as_secs_f64()
        ),
    }
}

fn criteria_5_and_6() -> Vec<Outcome> {
    let cfg = ScenarioConfig::defaults(ScenarioKind::GfConsistency);
    let (report, took) = run(&cfg);
    let (triangle_ok, failures) = check_value(&report, "triangle_failures");
    let probes: usize = report
        .tables
        .iter()
        .filter(|t| t.name.starts_with("triangle_"))
        .map(|t| t.rows.len())
        .sum();
    let c5 = Outcome {
        pass: report.complete && triangle_ok && probes == 81 && took <= Duration::from_secs(120),
        detail: format!(
            "{failures} of {probes} probes outside 10h + tail, {:.1}s",
            took.as_secs_f64()
        ),
    };
    let closed: Vec<_> = report
        .checks
        .iter()
        .filter(|c| c.name.starts_with("closed_form_"))
        .collect();
    let worst_g = closed
        .iter()
        .filter(|c| c.name.starts_with("closed_form_g"))
        .map(|c| c.value)
        .fold(0.0, f64::max);
    let worst_pmf = closed
        .iter()
        .filter(|c| c.name.starts_with("closed_form_pmf"))
        .map(|c| c.value)
        .fold(0.0, f64::max);
    let c6 = Outcome {
        pass: closed.len() == 6 && closed.iter().all(|c| c.pass),
        detail: format!(
            "sup |g - exp(-t(1-s))| = {worst_g:.2e} <= 1e-3, max pmf error {worst_pmf:.2e} <= 1e-2"
        ),
    };
    vec![c5, c6]
}

fn criterion_7() -> Outcome {
    let (report, _) = run(&ScenarioConfig::defaults(ScenarioKind::StatementBoundSweep));
    let (ok, violations) = check_value(&report, "bound_violations");
    let n = report.tables[0].rows.len();
    Outcome {
        pass: report.complete && ok && n == 100,
        detail: format!(
            "{violations} violations beyond 3 sigma in {n} configurations of 1e4 samples"
        ),
    }
}

fn criterion_8() -> Outcome {
    let (report, _) = run(&ScenarioConfig::defaults(ScenarioKind::Eq6Identity));
    let (ok, outside) = check_value(&report, "probes_outside_band");
    let n = report.tables[0].rows.len();
    Outcome {
        pass: report.complete && ok && n == 12,
        detail: format!("{outside} of {n} (l, m) probes outside 3 sigma"),
    }
}

fn criterion_9() -> Outcome {
    let (report, _) = run(&ScenarioConfig::defaults(ScenarioKind::MixingZeroCheck));
    let (ok, passes) = check_value(&report, "repetitions_within_band");
    Outcome {
        pass: report.complete && ok,
        detail: format!(
            "{passes} of {} repetitions within 3 stderr (need 19)",
            report.tables[0].rows.len()
        ),
    }
}

fn criterion_10() -> Outcome {
    let h_laws = [
        DistributionSpec::exponential(1.0),
        DistributionSpec::uniform(0.2, 1.8),
        DistributionSpec::Erlang {
            shape: 2,
            rate: 2.0,
        },
    ];
    let z_laws = [
        DistributionSpec::exponential(0.1),
        DistributionSpec::exponential(1.0),
        DistributionSpec::exponential(3.0),
        DistributionSpec::uniform(0.5, 2.5),
    ];
    let mut interleaving_bad = 0;
    let mut beta_bad = 0;
    let mut subflow_bad = 0;
    for i in 0..1000u64 {
        let mut rng = replication_rng(10, i, SUBSTREAM_PRIMARY);
        let h_law = &h_laws[(i % 3) as usize];
        let z_law = &z_laws[(i % 4) as usize];
        let h = RenewalPath::sample(h_law, 100.0, &mut rng).expect("H path");
        let z = RenewalPath::sample(z_law, 100.0, &mut rng).expect("Z path");
        let rec = mark(&h, &z).expect("marking");
        if rec.check_interleaving().is_err() {
            interleaving_bad += 1;
        }
        let marks = rec.t_doubleprime().len() - 1;
        if marks == 0 {
            continue;
        }
        let beta =
            beta_sequence(&mut RecordSource::new(&rec), marks, &mut rng).expect("beta from record");
        if !beta.is_well_formed() {
            beta_bad += 1;
        }
        if i < 100 {
            let times: Vec<f64> = beta
                .as_slice()
                .iter()
                .map(|&b| h.partial_sum(b as usize).expect("in range"))
                .collect();
            if beta.as_slice() != rec.marked_indices().as_slice()
                || times.as_slice() != &rec.t_doubleprime()[1..]
            {
                subflow_bad += 1;
            }
        }
        let mut geo = geometric_source(0.3).expect("valid p");
        geo.reset();
        if !beta_sequence(&mut geo, 50, &mut rng)
            .expect("geometric beta")
            .is_well_formed()
        {
            beta_bad += 1;
        }
    }
    Outcome {
        pass: interleaving_bad == 0 && beta_bad == 0 && subflow_bad == 0,
        detail: format!(
            "1000 path pairs: {interleaving_bad} interleaving failures, {beta_bad} malformed beta, {subflow_bad} subflow mismatches in 100"
        ),
    }
}

/// Reduced configurations so that every kind can run four times.
fn small(kind: ScenarioKind) -> ScenarioConfig {
    let d = ScenarioConfig::defaults(kind);
    match kind {
        ScenarioKind::Theorem1Geometric => ScenarioConfig {
            replications: 5000,
            ..d
        },
        ScenarioKind::Theorem2PoissonExample => ScenarioConfig {
            replications: 500,
            grid: GridSpec {
                h: 0.01,
                horizon: 40.0,
            },
            ..d
        },
        ScenarioKind::Eq6Identity => ScenarioConfig {
            replications: 1000,
            ..d
        },
        ScenarioKind::StatementBoundSweep => ScenarioConfig {
            replications: 1000,
            sweep_size: 20,
            ..d
        },
        ScenarioKind::MixingZeroCheck => ScenarioConfig {
            replications: 1000,
            repetitions: 4,
            min_passes: 3,
            ..d
        },
        ScenarioKind::GfConsistency => ScenarioConfig {
            replications: 1000,
            grid: GridSpec {
                h: 0.01,
                horizon: 5.0,
            },
            ..d
        },
    }
}

fn emitted_bytes(cfg: &ScenarioConfig, workers: usize) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().expect("temp dir");
    let report = run_scenario(
        cfg,
        &RunOptions {
            workers,
            ..RunOptions::default()
        },
    )
    .expect("scenario runs");
    let mut files = Vec::new();
    for format in [OutputFormat::Json, OutputFormat::Csv] {
        for path in emit_report(&report, format, dir.path()).expect("emit") {
            let name = path
                .file_name()
                .expect("file name")
                .to_string_lossy()
                .into_owned();
            files.push((name, std::fs::read(&path).expect("read back")));
        }
    }
    files
}

fn criterion_11() -> Outcome {
    let mut mismatched = Vec::new();
    for kind in ScenarioKind::ALL {
        let cfg = small(kind);
        let first = emitted_bytes(&cfg, 1);
        let runs = [
            emitted_bytes(&cfg, 1),
            emitted_bytes(&cfg, 4),
            emitted_bytes(&cfg, 4),
        ];
        if runs.iter().any(|r| *r != first) {
            mismatched.push(kind.name());
        }
    }
    Outcome {
        pass: mismatched.is_empty(),
        detail: if mismatched.is_empty() {
            "all six scenarios byte-identical across repeated runs at 1 and 4 workers".into()
        } else {
            format!("differing output: {}", mismatched.join(", "))
        },
    }
}

fn main() {
    let mut outcomes: Vec<(usize, Outcome)> = Vec::new();
    let mut record = |first: usize, batch: Vec<Outcome>| {
        for (i, o) in batch.into_iter().enumerate() {
            let n = first + i;
            println!(
                "[{}] criterion {n}: {}",
                if o.pass { "PASS" } else { "FAIL" },
                o.detail
            );
            outcomes.push((n, o));
        }
    };
    record(1, criteria_1_to_3());
    record(4, vec![criterion_4()]);
    record(5, criteria_5_and_6());
    record(7, vec![criterion_7()]);
    record(8, vec![criterion_8()]);
    record(9, vec![criterion_9()]);
    record(10, vec![criterion_10()]);
    record(11, vec![criterion_11()]);
    let failed: Vec<usize> = outcomes
        .iter()
        .filter(|(_, o)| !o.pass)
        .map(|(n, _)| *n)
        .collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", outcomes.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
