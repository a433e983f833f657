//! Command-line front end for the experiment harness.
//!
//! Exit status: 0 when every declared tolerance passed, 1 when one failed,
//! 2 on a configuration or runtime error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use raring::experiment::{
    convergence_table, emit_report, load_report, run_scenario, table_csv, ExperimentError,
    ExperimentReport, OutputFormat, RunOptions, ScenarioConfig, ScenarioKind,
};

#[derive(Parser)]
#[command(
    name = "raring",
    version,
    about = "Rarefied renewal process experiments"
)]
struct Cli {
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replications (samples per probe), overriding the config.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Directory for report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Report file format.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a JSON config file.
    Run { config: PathBuf },
    /// Print the convergence tables of a JSON report.
    Table { report: PathBuf },
    /// Randomized sweep of the bound on P(beta(m) < x).
    BoundCheck,
    /// Dependence of threshold events of the marking source.
    MixingCheck,
    /// Generating-function consistency checks.
    GfCheck,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool, ExperimentError> {
    let (config, opts) = match &cli.command {
        Command::Table { report } => {
            let report = load_report(report)?;
            if report.tables.iter().any(|t| t.is_ladder) {
                for table in convergence_table(&report)? {
                    println!("{}", table.render());
                }
            } else {
                // index tables have no trend to show, so print them flat
                for table in &report.tables {
                    println!(
                        "{} ({}, {} by {})\n{}",
                        table.name,
                        table.metric,
                        table.ladder_label,
                        table.probe_label,
                        table_csv(table)
                    );
                }
            }
            return Ok(true);
        }
        Command::Run { config } => ScenarioConfig::load(config)?,
        Command::BoundCheck => defaults(ScenarioKind::StatementBoundSweep),
        Command::MixingCheck => defaults(ScenarioKind::MixingZeroCheck),
        Command::GfCheck => defaults(ScenarioKind::GfConsistency),
    };
    let (config, opts) = apply_overrides(&cli, config, opts);
    let started = Instant::now();
    // files are written below so that their paths can be printed
    let report = run_scenario(
        &config,
        &RunOptions {
            output_dir: None,
            ..opts.clone()
        },
    )?;
    print_summary(&report);
    if let Some(dir) = &opts.output_dir {
        for path in emit_report(&report, opts.format, dir)? {
            println!("wrote {}", path.display());
        }
    }
    eprintln!("elapsed {:.2}s", started.elapsed().as_secs_f64());
    Ok(report.passed)
}

fn defaults(kind: ScenarioKind) -> (ScenarioConfig, RunOptions) {
    (ScenarioConfig::defaults(kind), RunOptions::default())
}

fn apply_overrides(
    cli: &Cli,
    mut config: ScenarioConfig,
    mut opts: RunOptions,
) -> (ScenarioConfig, RunOptions) {
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(reps) = cli.reps {
        config.replications = reps;
    }
    if let Some(out) = &cli.out {
        opts.output_dir = Some(out.clone());
    }
    if let Some(workers) = cli.workers {
        opts.workers = workers;
    }
    if let Some(format) = cli.format {
        opts.format = format;
    }
    (config, opts)
}

fn print_summary(report: &ExperimentReport) {
    println!("scenario {} seed {}", report.scenario, report.master_seed);
    for check in &report.checks {
        let mark = if check.pass { "PASS" } else { "FAIL" };
        println!(
            "[{mark}] {} = {:?} (tolerance {:?})",
            check.name, check.value, check.tolerance
        );
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    if !report.complete {
        println!("report incomplete: runtime cap reached");
    }
    println!("{}", if report.passed { "passed" } else { "failed" });
}
