//! Run configuration: an optional `key = value` file, overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use spice::estimators::SpiceMode;
use spice::simulation::{ModelKind, ModelSpec};
use spice::tuning::LambdaGrid;
use spice::{PenaltySpec, SolverConfig};

use crate::UsageError;

/// Values read from a config file, keyed by name. Lines are `key = value`;
/// blank lines and lines starting with `#` are skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| UsageError(format!("config line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(UsageError(format!("config line {}: unknown key `{key}`", i + 1)));
            }
            entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Ok(Self::parse(&text)?)
    }

    /// Flag value if given, else the file's value for `key`, parsed.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, UsageError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| UsageError(format!("config key `{key}`: cannot parse `{raw}`"))),
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "models",
    "p",
    "n",
    "n_val",
    "reps",
    "seed",
    "estimators",
    "grid",
    "lambda",
    "q",
    "mode",
    "inner_tol",
    "outer_tol",
    "max_inner_sweeps",
    "max_outer_iters",
    "out",
    "threads",
];

/// Comma-separated list, e.g. `30,60`.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|v| v.trim().parse::<T>().map_err(|_| format!("bad list entry `{v}`")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

/// `lo:hi:k`, `k` log-spaced values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub k: usize,
}

impl FromStr for GridSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("grid must look like lo:hi:k, got `{s}`");
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(Self {
            lo: parts[0].parse().map_err(|_| bad())?,
            hi: parts[1].parse().map_err(|_| bad())?,
            k: parts[2].parse().map_err(|_| bad())?,
        })
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<LambdaGrid, UsageError> {
        LambdaGrid::log_spaced(self.lo, self.hi, self.k).map_err(|e| UsageError(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode(pub SpiceMode);

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "corr" => Ok(Mode(SpiceMode::Correlation)),
            "cov" => Ok(Mode(SpiceMode::Covariance)),
            _ => Err(format!("mode must be corr or cov, got `{s}`")),
        }
    }
}

/// Estimators compared in a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Estimator {
    Spice,
    LedoitWolf,
    Sample,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Spice => "spice",
            Estimator::LedoitWolf => "ledoit_wolf",
            Estimator::Sample => "sample",
        }
    }
}

impl FromStr for Estimator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spice" => Ok(Estimator::Spice),
            "lw" | "ledoit_wolf" => Ok(Estimator::LedoitWolf),
            "sample" => Ok(Estimator::Sample),
            _ => Err(format!("unknown estimator `{s}`")),
        }
    }
}

/// Simulation model by name: `omega1` (AR1), `omega2` (AR4), `omega3` and
/// `omega4` (random sparse with `alpha` 0.1 and 0.5).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelName(pub ModelKind);

impl FromStr for ModelName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let spec = match s {
            "omega1" | "ar1" => ModelSpec::omega1(2),
            "omega2" | "ar4" => ModelSpec::omega2(2),
            "omega3" => ModelSpec::omega3(2, 0),
            "omega4" => ModelSpec::omega4(2, 0),
            _ => return Err(format!("unknown model `{s}`")),
        };
        Ok(ModelName(spec.kind))
    }
}

/// Solver settings shared by every subcommand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSettings {
    pub q: f64,
    pub mode: SpiceMode,
    pub solver: SolverConfig,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            q: 1.0,
            mode: SpiceMode::Correlation,
            solver: SolverConfig::default(),
        }
    }
}

impl FitSettings {
    pub fn penalty(&self, lambda: f64) -> Result<PenaltySpec, UsageError> {
        let pen = PenaltySpec::lasso(lambda);
        PenaltySpec::new(lambda, self.q, pen.epsilon).map_err(|e| UsageError(e.to_string()))
    }
}

/// Everything a simulation run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub models: Vec<ModelKind>,
    pub p_list: Vec<usize>,
    pub n: usize,
    pub n_val: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    /// `None` selects the default grid for each training sample.
    pub grid: Option<GridSpec>,
    /// Fixed penalty; skips tuning when set.
    pub lambda: Option<f64>,
    pub fit: FitSettings,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), UsageError> {
        let fail = |m: &str| Err(UsageError(m.to_string()));
        if self.models.is_empty() || self.p_list.is_empty() || self.estimators.is_empty() {
            return fail("models, p and estimators must be non-empty");
        }
        if self.p_list.iter().any(|&p| p < 2) {
            return fail("every p must be at least 2");
        }
        if self.n < 2 || self.n_val < 2 {
            return fail("n and n_val must be at least 2");
        }
        if self.n_reps == 0 {
            return fail("reps must be at least 1");
        }
        if let Some(g) = self.grid {
            g.build()?;
        }
        if let Some(l) = self.lambda {
            self.fit.penalty(l)?;
        }
        self.fit.penalty(0.0)?;
        self.fit.solver.validate().map_err(|e| UsageError(e.to_string()))
    }
}
