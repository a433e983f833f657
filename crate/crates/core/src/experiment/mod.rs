//! Seeded Monte Carlo experiments with convergence ladders and reports.
//!
//! Replication `i` of a run always draws from
//! [`replication_rng`](crate::rng::replication_rng)`(master_seed, i, substream)`,
//! independent of the ladder point, so successive ladder points reuse the
//! same random numbers and the worker count never changes a report.

mod config;
mod report;
mod scenarios;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::dist::DistError;
use crate::interaction::InteractionError;
use crate::limit::SolverError;
use crate::raring::RaringError;
use crate::renewal::PathError;

pub use config::{ConfigFile, GridSpec, OutputFormat, RunOptions, ScenarioConfig, ScenarioKind};
pub use report::{
    convergence_table, convergence_table_of, emit_report, file_stem, load_report, table_csv, Check,
    ConvergenceTable, Coverage, DistanceTable, EmpiricalSummary, ExperimentReport, Row,
};

/// Standard deviation of the limiting Kolmogorov distribution; a KS distance
/// from `n` draws of the reference law fluctuates on the scale `KS_NULL_SD / sqrt(n)`.
pub const KS_NULL_SD: f64 = 0.2603;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config field '{field}': {reason}")]
    Config { field: &'static str, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Raring(#[from] RaringError),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{0}")]
    Table(String),
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Shared state of one run.
pub(crate) struct RunContext<'a> {
    pub cfg: &'a ScenarioConfig,
    deadline: Instant,
}

impl RunContext<'_> {
    pub fn expired(&self) -> bool {
        Instant::now() >= self.deadline
    }
}

/// Runs `config`, writing report files when `opts.output_dir` is set.
///
/// The returned report depends only on `config` unless the runtime cap cut
/// the run short, in which case `complete` is false.
pub fn run_scenario(
    config: &ScenarioConfig,
    opts: &RunOptions,
) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let ctx = RunContext {
        cfg: config,
        deadline: Instant::now() + Duration::from_secs_f64(opts.runtime_cap_secs),
    };
    let out = pool.install(|| scenarios::run(&ctx))?;
    let passed = out.complete && out.checks.iter().all(|c| c.pass);
    let report = ExperimentReport {
        scenario: config.scenario,
        master_seed: config.master_seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        seed_derivation: "ChaCha8 keyed by (master_seed, substream), stream = replication index"
            .to_string(),
        config: config.clone(),
        tables: out.tables,
        checks: out.checks,
        distributions: out.distributions,
        notes: out.notes,
        coverage: out.coverage,
        complete: out.complete,
        passed,
    };
    if let Some(dir) = &opts.output_dir {
        emit_report(&report, opts.format, dir)?;
    }
    Ok(report)
}
