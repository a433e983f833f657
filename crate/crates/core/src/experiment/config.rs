//! Scenario configuration: JSON schema, per-kind defaults and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::dist::{grid_len, DistributionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Theorem1Geometric,
    Theorem2PoissonExample,
    Eq6Identity,
    StatementBoundSweep,
    MixingZeroCheck,
    GfConsistency,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        Self::Theorem1Geometric,
        Self::Theorem2PoissonExample,
        Self::Eq6Identity,
        Self::StatementBoundSweep,
        Self::MixingZeroCheck,
        Self::GfConsistency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Theorem1Geometric => "theorem1_geometric",
            Self::Theorem2PoissonExample => "theorem2_poisson_example",
            Self::Eq6Identity => "eq6_identity",
            Self::StatementBoundSweep => "statement_bound_sweep",
            Self::MixingZeroCheck => "mixing_zero_check",
            Self::GfConsistency => "gf_consistency",
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: f64,
    pub horizon: f64,
}

/// Everything that determines the numbers in a report.
///
/// `ladder` holds the scaling parameter `c_n` in increasing order. For the
/// Poisson marking example the marking rate is `lambda_n = 1 / c_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub master_seed: u64,
    pub replications: usize,
    pub ladder: Vec<f64>,
    pub t_values: Vec<f64>,
    pub k_values: Vec<u32>,
    pub s_values: Vec<f64>,
    pub l_values: Vec<u64>,
    pub m_values: Vec<u64>,
    pub h_law: DistributionSpec,
    pub z_law: DistributionSpec,
    pub r_laws: Vec<DistributionSpec>,
    pub grid: GridSpec,
    /// Final-ladder-point tolerance on the headline distance.
    pub tolerance: f64,
    /// Tolerance for `k > 1` and for the scaling candidates.
    pub kth_tolerance: f64,
    pub sigmas: f64,
    pub sweep_size: usize,
    pub lag: u64,
    pub repetitions: usize,
    pub min_passes: usize,
    pub pmf_k_max: usize,
}

/// Execution settings that never change the numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Rayon worker count; 0 uses every core.
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub runtime_cap_secs: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            output_dir: None,
            format: OutputFormat::Json,
            runtime_cap_secs: 600.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format '{other}', expected json or csv")),
        }
    }
}

/// On-disk form: only `scenario` is required, everything else falls back to
/// the defaults of that kind.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<ScenarioKind>,
    pub master_seed: Option<u64>,
    pub replications: Option<usize>,
    pub ladder: Option<Vec<f64>>,
    pub t_values: Option<Vec<f64>>,
    pub k_values: Option<Vec<u32>>,
    pub s_values: Option<Vec<f64>>,
    pub l_values: Option<Vec<u64>>,
    pub m_values: Option<Vec<u64>>,
    pub h_law: Option<DistributionSpec>,
    pub z_law: Option<DistributionSpec>,
    pub r_laws: Option<Vec<DistributionSpec>>,
    pub grid: Option<GridSpec>,
    pub tolerance: Option<f64>,
    pub kth_tolerance: Option<f64>,
    pub sigmas: Option<f64>,
    pub sweep_size: Option<usize>,
    pub lag: Option<u64>,
    pub repetitions: Option<usize>,
    pub min_passes: Option<usize>,
    pub pmf_k_max: Option<usize>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub runtime_cap_secs: Option<f64>,
}

fn field(name: &'static str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::Config {
        field: name,
        reason: reason.into(),
    }
}

impl ScenarioConfig {
    pub fn defaults(kind: ScenarioKind) -> Self {
        let base = Self {
            scenario: kind,
            master_seed: 1,
            replications: 10_000,
            ladder: vec![10.0, 100.0, 1000.0],
            t_values: vec![2.0],
            k_values: vec![1, 3],
            s_values: vec![0.2, 0.5, 0.8],
            l_values: vec![0, 5, 20],
            m_values: vec![1, 5, 10, 50],
            h_law: DistributionSpec::exponential(1.0),
            z_law: DistributionSpec::exponential(0.1),
            r_laws: vec![
                DistributionSpec::exponential(1.0),
                DistributionSpec::deterministic(1.0),
                DistributionSpec::uniform(0.5, 1.5),
            ],
            grid: GridSpec {
                h: 1e-3,
                horizon: 40.0,
            },
            tolerance: 0.02,
            kth_tolerance: 0.03,
            sigmas: 3.0,
            sweep_size: 100,
            lag: 10,
            repetitions: 20,
            min_passes: 19,
            pmf_k_max: 40,
        };
        match kind {
            ScenarioKind::Theorem1Geometric => Self {
                replications: 100_000,
                ..base
            },
            ScenarioKind::Theorem2PoissonExample => Self {
                replications: 20_000,
                ..base
            },
            ScenarioKind::Eq6Identity => base,
            ScenarioKind::StatementBoundSweep => base,
            ScenarioKind::MixingZeroCheck => Self {
                l_values: vec![0, 5],
                m_values: vec![1, 3],
                ..base
            },
            ScenarioKind::GfConsistency => Self {
                replications: 20_000,
                t_values: vec![1.0, 2.0, 5.0],
                grid: GridSpec {
                    h: 1e-3,
                    horizon: 5.0,
                },
                ..base
            },
        }
    }

    pub fn from_file(file: ConfigFile) -> Result<(Self, RunOptions), ExperimentError> {
        let kind = file.scenario.ok_or_else(|| field("scenario", "missing"))?;
        let d = Self::defaults(kind);
        let cfg = Self {
            scenario: kind,
            master_seed: file.master_seed.unwrap_or(d.master_seed),
            replications: file.replications.unwrap_or(d.replications),
            ladder: file.ladder.unwrap_or(d.ladder),
            t_values: file.t_values.unwrap_or(d.t_values),
            k_values: file.k_values.unwrap_or(d.k_values),
            s_values: file.s_values.unwrap_or(d.s_values),
            l_values: file.l_values.unwrap_or(d.l_values),
            m_values: file.m_values.unwrap_or(d.m_values),
            h_law: file.h_law.unwrap_or(d.h_law),
            z_law: file.z_law.unwrap_or(d.z_law),
            r_laws: file.r_laws.unwrap_or(d.r_laws),
            grid: file.grid.unwrap_or(d.grid),
            tolerance: file.tolerance.unwrap_or(d.tolerance),
            kth_tolerance: file.kth_tolerance.unwrap_or(d.kth_tolerance),
            sigmas: file.sigmas.unwrap_or(d.sigmas),
            sweep_size: file.sweep_size.unwrap_or(d.sweep_size),
            lag: file.lag.unwrap_or(d.lag),
            repetitions: file.repetitions.unwrap_or(d.repetitions),
            min_passes: file.min_passes.unwrap_or(d.min_passes),
            pmf_k_max: file.pmf_k_max.unwrap_or(d.pmf_k_max),
        };
        let defaults = RunOptions::default();
        let opts = RunOptions {
            workers: file.workers.unwrap_or(defaults.workers),
            output_dir: file.output_dir,
            format: file.format.unwrap_or(defaults.format),
            runtime_cap_secs: file.runtime_cap_secs.unwrap_or(defaults.runtime_cap_secs),
        };
        if opts.runtime_cap_secs.is_nan() || opts.runtime_cap_secs <= 0.0 {
            return Err(field("runtime_cap_secs", "must be positive"));
        }
        Ok((cfg, opts))
    }

    pub fn load(path: &Path) -> Result<(Self, RunOptions), ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ConfigFile = serde_json::from_str(&text)
            .map_err(|e| field("config", format!("{}: {e}", path.display())))?;
        Self::from_file(file)
    }

    /// Checks the fields the chosen scenario reads.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.replications == 0 {
            return Err(field("replications", "must be at least 1"));
        }
        let uses_ladder = matches!(
            self.scenario,
            ScenarioKind::Theorem1Geometric | ScenarioKind::Theorem2PoissonExample
        );
        if uses_ladder {
            if self.ladder.is_empty() {
                return Err(field("ladder", "must not be empty"));
            }
            if let Some(&bad) = self.ladder.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
                return Err(field(
                    "ladder",
                    format!("entries must be positive, got {bad}"),
                ));
            }
            if self.ladder.windows(2).any(|w| w[1] <= w[0]) {
                return Err(field("ladder", "must be strictly increasing"));
            }
        }
        for (name, v) in [
            ("tolerance", self.tolerance),
            ("kth_tolerance", self.kth_tolerance),
            ("sigmas", self.sigmas),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(field(name, format!("must be positive, got {v}")));
            }
        }
        grid_len(self.grid.h, self.grid.horizon).map_err(|e| field("grid", e.to_string()))?;
        for (name, law) in [("h_law", &self.h_law), ("z_law", &self.z_law)] {
            law.validate().map_err(|e| field(name, e.to_string()))?;
        }
        for law in &self.r_laws {
            law.validate().map_err(|e| field("r_laws", e.to_string()))?;
        }
        match self.scenario {
            ScenarioKind::Theorem1Geometric => {
                nonempty("t_values", &self.t_values)?;
                if self.t_values.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                    return Err(field("t_values", "entries must be positive"));
                }
                if self.ladder.iter().any(|c| *c < 1.0) {
                    return Err(field(
                        "ladder",
                        "c_n must be at least 1 so that p = 1/c_n is a probability",
                    ));
                }
            }
            ScenarioKind::Theorem2PoissonExample => {
                nonempty("k_values", &self.k_values)?;
                if self.k_values.contains(&0) {
                    return Err(field("k_values", "k must be at least 1"));
                }
                if !matches!(self.h_law, DistributionSpec::Exponential { .. }) {
                    return Err(field(
                        "h_law",
                        "the Poisson marking example needs an exponential H law",
                    ));
                }
            }
            ScenarioKind::Eq6Identity => {
                nonempty("l_values", &self.l_values)?;
                nonempty("m_values", &self.m_values)?;
                if self.m_values.contains(&0) {
                    return Err(field("m_values", "m must be at least 1"));
                }
            }
            ScenarioKind::StatementBoundSweep => {
                if self.sweep_size == 0 {
                    return Err(field("sweep_size", "must be at least 1"));
                }
                if self.replications < 1000 {
                    return Err(field(
                        "replications",
                        "the bound check needs at least 1000 samples",
                    ));
                }
            }
            ScenarioKind::MixingZeroCheck => {
                nonempty("l_values", &self.l_values)?;
                nonempty("m_values", &self.m_values)?;
                if self.replications < 2 {
                    return Err(field("replications", "need at least 2 samples"));
                }
                if let Some(&m) = self.m_values.iter().find(|&&m| m >= self.lag) {
                    return Err(field(
                        "m_values",
                        format!("level {m} must be below the lag {}", self.lag),
                    ));
                }
                if self.repetitions == 0 || self.min_passes > self.repetitions {
                    return Err(field(
                        "min_passes",
                        "must lie in 0..=repetitions with repetitions >= 1",
                    ));
                }
            }
            ScenarioKind::GfConsistency => {
                nonempty("r_laws", &self.r_laws)?;
                nonempty("s_values", &self.s_values)?;
                nonempty("t_values", &self.t_values)?;
                if self.s_values.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
                    return Err(field("s_values", "entries must lie in (0, 1]"));
                }
                if let Some(&t) = self
                    .t_values
                    .iter()
                    .find(|t| !(**t >= 0.0 && **t <= self.grid.horizon))
                {
                    return Err(field(
                        "t_values",
                        format!("{t} lies outside [0, grid.horizon]"),
                    ));
                }
                if self.pmf_k_max == 0 {
                    return Err(field("pmf_k_max", "must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

fn nonempty<T>(name: &'static str, v: &[T]) -> Result<(), ExperimentError> {
    if v.is_empty() {
        Err(field(name, "must not be empty"))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_serialize_to_scenario_names() {
        for kind in ScenarioKind::ALL {
            assert_eq!(
                serde_json::to_string(&kind).unwrap(),
                format!("\"{}\"", kind.name())
            );
        }
    }

    #[test]
    fn defaults_validate() {
        for kind in ScenarioKind::ALL {
            ScenarioConfig::defaults(kind).validate().unwrap();
        }
    }

    #[test]
    fn zero_replications_names_the_field() {
        let cfg = ScenarioConfig {
            replications: 0,
            ..ScenarioConfig::defaults(ScenarioKind::Theorem1Geometric)
        };
        match cfg.validate() {
            Err(ExperimentError::Config { field, .. }) => assert_eq!(field, "replications"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ladder_must_increase() {
        let cfg = ScenarioConfig {
            ladder: vec![10.0, 10.0],
            ..ScenarioConfig::defaults(ScenarioKind::Theorem1Geometric)
        };
        assert!(matches!(
            cfg.validate(),
            Err(ExperimentError::Config {
                field: "ladder",
                ..
            })
        ));
    }

    #[test]
    fn file_fills_missing_fields_from_kind_defaults() {
        let file: ConfigFile =
            serde_json::from_str(r#"{"scenario": "eq6_identity", "master_seed": 9, "workers": 2}"#)
                .unwrap();
        let (cfg, opts) = ScenarioConfig::from_file(file).unwrap();
        assert_eq!(cfg.master_seed, 9);
        assert_eq!(cfg.l_values, vec![0, 5, 20]);
        assert_eq!(opts.workers, 2);
        assert!(
            serde_json::from_str::<ConfigFile>(r#"{"scenario": "eq6_identity", "bogus": 1}"#)
                .is_err()
        );
    }
}
