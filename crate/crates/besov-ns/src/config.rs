//! Run configuration: one JSON document with per-module sections, parsed
//! strictly (unknown keys are errors, anchored to a line and column) so a
//! config file is a faithful, diffable record of an experiment.
//!
//! JSON cannot express infinity, so every Lebesgue exponent in here is an
//! `Option<f64>` where `None` (or an omitted key) means the sup norm.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::criteria::CriterionParams;
use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::paraproduct::ParaproductLawSpec;
use crate::solver::{InitialFieldKind, SolverConfig};

/// Resolves an optional exponent, `None` meaning infinity.
pub fn exponent_or_inf(q: Option<f64>) -> f64 {
    q.unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { dim: 2, n: 64 }
    }
}

impl GridSection {
    pub fn build(&self) -> Result<std::sync::Arc<TorusGrid>> {
        Ok(std::sync::Arc::new(TorusGrid::new(self.dim, self.n)?))
    }
}

/// What the `norms` command evaluates on its input field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormsSection {
    pub besov_s: f64,
    pub besov_q: Option<f64>,
    pub lp_p: Option<f64>,
    pub sobolev_alpha: f64,
    /// Window for the heat-characterization norm.
    pub theta_delta: f64,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self {
            besov_s: -0.5,
            besov_q: None,
            lp_p: None,
            sobolev_alpha: 1.0,
            theta_delta: 1.0,
        }
    }
}

/// Law-constant estimation settings for the `paraproduct` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParaproductSection {
    pub sigma1: f64,
    pub sigma2: f64,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    /// Random pairs in the sweep.
    pub pairs: usize,
}

impl Default for ParaproductSection {
    fn default() -> Self {
        Self {
            sigma1: 0.5,
            sigma2: 0.75,
            q1: None,
            q2: None,
            p1: None,
            p2: None,
            pairs: 20,
        }
    }
}

impl ParaproductSection {
    pub fn law_spec(&self) -> Result<ParaproductLawSpec> {
        ParaproductLawSpec::new(
            self.sigma1,
            self.sigma2,
            exponent_or_inf(self.q1),
            exponent_or_inf(self.q2),
            exponent_or_inf(self.p1),
            exponent_or_inf(self.p2),
        )
    }
}

/// Corpus sizes and seeds for regenerating the frozen-constants table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    /// Grid sizes swept for envelope constants.
    pub sizes: Vec<usize>,
    /// Fields per corpus sweep.
    pub fields: usize,
    /// Field pairs per paraproduct-law sweep.
    pub pairs: usize,
    /// Trace pairs per time-norm sweep.
    pub trace_pairs: usize,
    /// Solver runs behind run-dependent constants.
    pub runs: usize,
    pub seed_base: u64,
    /// Multiplicative regression band stored with every constant.
    pub band: f64,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            sizes: vec![32, 64],
            fields: 100,
            pairs: 200,
            trace_pairs: 12,
            runs: 6,
            seed_base: 1000,
            band: 0.2,
        }
    }
}

/// Which experiment the `criteria` command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Regularity,
    Blowup,
    Uniqueness,
    Stability,
    Persistence,
    ThetaChain,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regularity" => Ok(Self::Regularity),
            "blowup" => Ok(Self::Blowup),
            "uniqueness" => Ok(Self::Uniqueness),
            "stability" => Ok(Self::Stability),
            "persistence" => Ok(Self::Persistence),
            "theta-chain" => Ok(Self::ThetaChain),
            other => Err(Error::InvalidArgument(format!(
                "unknown experiment {other:?}; expected regularity, blowup, uniqueness, \
                 stability, persistence, or theta-chain"
            ))),
        }
    }
}

/// The whole run configuration. Every command reads the sections it needs;
/// the rest keep their defaults and are echoed into reports untouched.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub grid: GridSection,
    pub solver: SolverConfig,
    pub initial: InitialFieldKind,
    pub criteria: CriterionParams,
    pub norms: NormsSection,
    pub paraproduct: ParaproductSection,
    pub calibration: CalibrationSection,
    /// Experiments run by the `criteria` command; empty means all
    /// trace-based ones.
    pub experiments: Vec<ExperimentKind>,
    /// Constants table; `None` uses the table embedded at build time.
    pub constants_path: Option<PathBuf>,
    /// Field container consumed by `decompose`/`norms` instead of `initial`.
    pub input_field: Option<PathBuf>,
    /// Trace manifest consumed by `criteria` instead of a fresh solve.
    pub input_trace: Option<PathBuf>,
    /// Worker cap; `None` defers to BESOV_NS_THREADS or the core count.
    pub threads: Option<usize>,
    /// Amplitude of the data perturbation in the stability experiment.
    pub stability_perturbation: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: PathBuf::from("out"),
            grid: GridSection::default(),
            solver: SolverConfig::default(),
            initial: InitialFieldKind::default(),
            criteria: CriterionParams::default(),
            norms: NormsSection::default(),
            paraproduct: ParaproductSection::default(),
            calibration: CalibrationSection::default(),
            experiments: Vec::new(),
            constants_path: None,
            input_field: None,
            input_trace: None,
            threads: None,
            stability_perturbation: 1e-3,
        }
    }
}

impl RunConfig {
    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_slice(bytes).map_err(Error::config_from_json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_slice(&std::fs::read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.solver.validate()?;
        self.criteria.validate()?;
        self.paraproduct.law_spec()?;
        if self.paraproduct.pairs == 0 {
            return Err(Error::InvalidArgument("paraproduct.pairs must be positive".into()));
        }
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(Error::InvalidArgument("threads must be at least 1".into()));
            }
        }
        let c = &self.calibration;
        if c.sizes.is_empty()
            || c.sizes.iter().any(|&n| !n.is_power_of_two() || !(8..=8192).contains(&n))
        {
            return Err(Error::InvalidArgument(
                "calibration.sizes must be powers of two in [8, 8192]".into(),
            ));
        }
        if c.fields == 0 || c.pairs == 0 || c.trace_pairs == 0 || c.runs == 0 {
            return Err(Error::InvalidArgument("calibration corpus sizes must be positive".into()));
        }
        if !(c.band > 0.0 && c.band < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "calibration.band = {} outside (0, 1)",
                c.band
            )));
        }
        if !(self.stability_perturbation > 0.0) {
            return Err(Error::InvalidArgument("stability_perturbation must be positive".into()));
        }
        Ok(())
    }

    /// JSON echo embedded into report provenance.
    pub fn echo(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
