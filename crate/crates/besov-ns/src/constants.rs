//! Frozen calibration constants.
//!
//! Inequality-style checks in this crate are two-phase: a calibration pass
//! measures each constant on a seeded corpus and freezes it here together
//! with a multiplicative band; later runs assert that fresh measurements
//! stay inside `value * [1 - band, 1 + band]`. Stability, not magnitude, is
//! the tested content. The checked-in file is regenerated by the `calibrate`
//! command.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default multiplicative regression band.
pub const DEFAULT_BAND: f64 = 0.2;

const EMBEDDED: &str = include_str!("../data/frozen_constants.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenConstant {
    pub value: f64,
    pub band: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FrozenConstants {
    pub constants: BTreeMap<String, FrozenConstant>,
}

/// Canonical key for a constant measured in dimension `d`.
pub fn key(name: &str, dim: usize) -> String {
    format!("{name}_d{dim}")
}

impl FrozenConstants {
    /// The constants compiled into the crate.
    pub fn load_default() -> Result<Self> {
        Self::from_json(EMBEDDED.as_bytes())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let parsed: Self = serde_json::from_slice(bytes).map_err(Error::config_from_json)?;
        for (name, c) in &parsed.constants {
            if !c.value.is_finite() || c.value <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "frozen constant '{name}' must be finite and positive, got {}",
                    c.value
                )));
            }
            if !(c.band > 0.0 && c.band < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "band for '{name}' must lie in (0, 1), got {}",
                    c.band
                )));
            }
        }
        Ok(parsed)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64, band: f64) {
        self.constants.insert(name.into(), FrozenConstant { value, band });
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &FrozenConstant)> {
        self.constants.iter()
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.constants
            .get(name)
            .map(|c| c.value)
            .ok_or_else(|| Error::MissingConstant(name.to_string()))
    }

    /// The acceptance interval `value * [1 - band, 1 + band]`.
    pub fn interval(&self, name: &str) -> Result<(f64, f64)> {
        let c = self
            .constants
            .get(name)
            .ok_or_else(|| Error::MissingConstant(name.to_string()))?;
        Ok((c.value * (1.0 - c.band), c.value * (1.0 + c.band)))
    }

    /// Whether a fresh measurement sits inside the frozen band.
    pub fn within(&self, name: &str, measured: f64) -> Result<bool> {
        let (lo, hi) = self.interval(name)?;
        Ok(measured >= lo && measured <= hi)
    }

    pub fn is_empty(&self) -> bool {
        self.constants.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_file_parses() {
        // The embedded file may be empty before a calibration pass, but it
        // must always parse.
        FrozenConstants::load_default().unwrap();
    }

    #[test]
    fn band_checks_and_missing_keys() {
        let mut c = FrozenConstants::default();
        c.set(key("demo", 2), 2.0, 0.2);
        assert_eq!(c.get("demo_d2").unwrap(), 2.0);
        assert!(c.within("demo_d2", 2.3).unwrap());
        assert!(!c.within("demo_d2", 2.5).unwrap());
        assert!(!c.within("demo_d2", 1.5).unwrap());
        assert!(matches!(c.get("absent"), Err(Error::MissingConstant(_))));
        let (lo, hi) = c.interval("demo_d2").unwrap();
        assert!((lo - 1.6).abs() < 1e-15 && (hi - 2.4).abs() < 1e-15);
    }

    #[test]
    fn serialization_roundtrip_rejects_bad_values() {
        let mut c = FrozenConstants::default();
        c.set("alpha", 1.5, 0.1);
        let s = c.to_json_string().unwrap();
        let back = FrozenConstants::from_json(s.as_bytes()).unwrap();
        assert_eq!(back.constants["alpha"], FrozenConstant { value: 1.5, band: 0.1 });

        let bad = r#"{"constants": {"x": {"value": -1.0, "band": 0.2}}}"#;
        assert!(FrozenConstants::from_json(bad.as_bytes()).is_err());
        let bad_band = r#"{"constants": {"x": {"value": 1.0, "band": 1.5}}}"#;
        assert!(FrozenConstants::from_json(bad_band.as_bytes()).is_err());
    }
}
