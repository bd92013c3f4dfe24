//! Structured experiment output: named time series, scalar summaries, and
//! boolean verdicts that must cite a series or scalar as evidence, plus a
//! provenance block. Maps are ordered so serialized reports are
//! deterministic; the provenance block is the only part allowed to differ
//! between reruns of the same configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub value: bool,
    /// Name of the series or scalar this verdict is judged from.
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    /// Wall-clock creation time; excluded from determinism comparisons.
    pub created_unix: u64,
    pub seed: Option<u64>,
    pub config_echo: serde_json::Value,
}

impl Provenance {
    pub fn new(config_echo: serde_json::Value, seed: Option<u64>) -> Self {
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix,
            seed,
            config_echo,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    /// Named `(t, value)` series.
    pub series: BTreeMap<String, Vec<(f64, f64)>>,
    pub scalars: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, provenance: Provenance) -> Self {
        Self {
            name: name.into(),
            series: BTreeMap::new(),
            scalars: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            provenance,
        }
    }

    pub fn add_series(&mut self, name: impl Into<String>, points: Vec<(f64, f64)>) {
        self.series.insert(name.into(), points);
    }

    pub fn add_scalar(&mut self, name: impl Into<String>, value: f64) {
        self.scalars.insert(name.into(), value);
    }

    /// Records a verdict; `evidence` must name an existing series or scalar.
    pub fn add_verdict(
        &mut self,
        name: impl Into<String>,
        evidence: &str,
        value: bool,
    ) -> Result<()> {
        if !self.series.contains_key(evidence) && !self.scalars.contains_key(evidence) {
            return Err(Error::InvalidArgument(format!(
                "verdict evidence '{evidence}' is not a series or scalar of this report"
            )));
        }
        self.verdicts.insert(name.into(), Verdict { value, evidence: evidence.to_string() });
        Ok(())
    }

    /// Re-checks the evidence invariant (useful after deserializing).
    pub fn validate(&self) -> Result<()> {
        for (name, v) in &self.verdicts {
            if !self.series.contains_key(&v.evidence) && !self.scalars.contains_key(&v.evidence) {
                return Err(Error::InvalidArgument(format!(
                    "verdict '{name}' cites missing evidence '{}'",
                    v.evidence
                )));
            }
        }
        Ok(())
    }

    pub fn all_verdicts_pass(&self) -> bool {
        self.verdicts.values().all(|v| v.value)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// JSON with the provenance timestamp zeroed: two runs of the same
    /// configuration must agree byte for byte on this form.
    pub fn canonical_json(&self) -> Result<String> {
        let mut c = self.clone();
        c.provenance.created_unix = 0;
        let mut s = serde_json::to_string_pretty(&c)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let report: Self = serde_json::from_slice(bytes).map_err(Error::config_from_json)?;
        report.validate()?;
        Ok(report)
    }

    /// One CSV per series, `t,value` header, full-precision values.
    pub fn series_csv(&self, name: &str) -> Result<String> {
        let points = self
            .series
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("no series named '{name}'")))?;
        let mut out = String::from("t,value\n");
        for (t, v) in points {
            out.push_str(&format!("{t},{v}\n"));
        }
        Ok(out)
    }

    /// Writes `<name>.json` plus `<name>.<series>.csv` files; returns the
    /// paths written.
    pub fn write_files(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json_path = dir.join(format!("{}.json", self.name));
        std::fs::write(&json_path, self.to_json_string()?)?;
        written.push(json_path);
        for series_name in self.series.keys() {
            let path = dir.join(format!("{}.{}.csv", self.name, series_name));
            std::fs::write(&path, self.series_csv(series_name)?)?;
            written.push(path);
        }
        Ok(written)
    }
}
