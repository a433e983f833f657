//! Report structure, convergence tables and file output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{OutputFormat, ScenarioConfig, ScenarioKind};
use super::ExperimentError;

/// One cell of a distance table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub ladder: f64,
    pub probe: f64,
    pub distance: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    pub name: String,
    /// `ks`, `tv`, `abs_diff` or `excess`.
    pub metric: String,
    pub ladder_label: String,
    pub probe_label: String,
    /// Whether the `ladder` column is a scaling ladder (as opposed to an index).
    pub is_ladder: bool,
    pub tolerance: f64,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, minimum: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance: minimum,
            pass: value >= minimum,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            value: f64::from(u8::from(pass)),
            tolerance: 1.0,
            pass,
        }
    }
}

/// Summary of one empirical law at one ladder point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub table: String,
    pub ladder: f64,
    pub probe: f64,
    /// `deciles` (levels 0.1..0.9) or `pmf`.
    pub kind: String,
    pub values: Vec<f64>,
}

/// Which module property a scenario exercises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub module: String,
    pub property: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: ScenarioKind,
    pub master_seed: u64,
    pub crate_version: String,
    pub seed_derivation: String,
    pub config: ScenarioConfig,
    pub tables: Vec<DistanceTable>,
    pub checks: Vec<Check>,
    pub distributions: Vec<EmpiricalSummary>,
    pub notes: Vec<String>,
    pub coverage: Vec<Coverage>,
    /// False when the runtime cap cut the run short.
    pub complete: bool,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&DistanceTable> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Rows are ladder points, columns are probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub name: String,
    pub metric: String,
    pub ladder: Vec<f64>,
    pub probes: Vec<f64>,
    /// `cells[i][j] = (distance, stderr)` at ladder point `i`, probe `j`.
    pub cells: Vec<Vec<Option<(f64, f64)>>>,
    /// Per probe: distances strictly decrease down the ladder.
    pub decreasing: Vec<bool>,
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn convergence_table_of(table: &DistanceTable) -> Result<ConvergenceTable, ExperimentError> {
    let ladder = sorted_unique(table.rows.iter().map(|r| r.ladder).collect());
    let probes = sorted_unique(table.rows.iter().map(|r| r.probe).collect());
    if probes.is_empty() {
        return Err(ExperimentError::Table(format!(
            "table '{}' has an empty probe grid",
            table.name
        )));
    }
    if ladder.len() < 2 {
        return Err(ExperimentError::Table(format!(
            "table '{}' has {} ladder point(s), need at least 2",
            table.name,
            ladder.len()
        )));
    }
    let mut cells = vec![vec![None; probes.len()]; ladder.len()];
    for r in &table.rows {
        let i = ladder
            .iter()
            .position(|&c| c == r.ladder)
            .expect("collected above");
        let j = probes
            .iter()
            .position(|&p| p == r.probe)
            .expect("collected above");
        cells[i][j] = Some((r.distance, r.stderr));
    }
    let decreasing = (0..probes.len())
        .map(|j| {
            let col: Vec<f64> = cells.iter().filter_map(|row| row[j].map(|c| c.0)).collect();
            col.len() == ladder.len() && col.windows(2).all(|w| w[1] < w[0])
        })
        .collect();
    Ok(ConvergenceTable {
        name: table.name.clone(),
        metric: table.metric.clone(),
        ladder,
        probes,
        cells,
        decreasing,
    })
}

/// Convergence tables for every scaling-ladder table of the report.
pub fn convergence_table(
    report: &ExperimentReport,
) -> Result<Vec<ConvergenceTable>, ExperimentError> {
    let ladders: Vec<&DistanceTable> = report.tables.iter().filter(|t| t.is_ladder).collect();
    if ladders.is_empty() {
        return Err(ExperimentError::Table(format!(
            "{} report has no ladder table",
            report.scenario
        )));
    }
    ladders.into_iter().map(convergence_table_of).collect()
}

impl ConvergenceTable {
    pub fn render(&self) -> String {
        let mut out = format!("{} ({})\n", self.name, self.metric);
        let _ = write!(out, "{:>12}", "ladder");
        for p in &self.probes {
            let _ = write!(out, " {:>22}", format!("probe={p}"));
        }
        out.push('\n');
        for (c, row) in self.ladder.iter().zip(&self.cells) {
            let _ = write!(out, "{c:>12}");
            for cell in row {
                let text =
                    cell.map_or_else(|| "-".to_string(), |(d, s)| format!("{d:.5} ± {s:.5}"));
                let _ = write!(out, " {text:>22}");
            }
            out.push('\n');
        }
        let _ = write!(out, "{:>12}", "decreasing");
        for d in &self.decreasing {
            let _ = write!(out, " {d:>22}");
        }
        out.push('\n');
        out
    }
}

pub fn file_stem(report: &ExperimentReport) -> String {
    format!("{}_seed{}", report.scenario, report.master_seed)
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, ExperimentError> {
    std::fs::write(&path, contents).map_err(|source| ExperimentError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn table_csv(table: &DistanceTable) -> String {
    let mut out = String::from("ladder,probe,distance,stderr,pass\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{}",
            r.ladder, r.probe, r.distance, r.stderr, r.pass
        );
    }
    out
}

/// Writes the report into `dir` and returns the paths written.
///
/// JSON writes one file holding the whole report; CSV writes one file per table.
pub fn emit_report(
    report: &ExperimentReport,
    format: OutputFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let stem = file_stem(report);
    match format {
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(report)
                .map_err(|e| ExperimentError::Serialize(e.to_string()))?;
            text.push('\n');
            Ok(vec![write_file(dir.join(format!("{stem}.json")), &text)?])
        }
        OutputFormat::Csv => report
            .tables
            .iter()
            .map(|t| write_file(dir.join(format!("{stem}_{}.csv", t.name)), &table_csv(t)))
            .collect(),
    }
}

pub fn load_report(path: &Path) -> Result<ExperimentReport, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| ExperimentError::Serialize(format!("{}: {e}", path.display())))
}
