//! Run configuration: one strict JSON document.

use std::fmt;
use std::path::Path;

use kslie_core::{CoeffSet, ConservedQuantityId, IntegratorConfig, NewtonSettings, Point5, ProlongedPoint};
use serde::Deserialize;

use crate::verify::CheckId;

/// A configuration problem, located by its path in the document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { path: path.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at `{}`: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `a_1(t), ..., a_5(t)`; the standard set when omitted.
    #[serde(default = "standard_coefficients")]
    pub coefficients: [String; 5],
    /// One `[x, y, z, u, v]` per copy.
    #[serde(default)]
    pub initial: Vec<[f64; 5]>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub newton: NewtonSettings,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Overrides every residual tolerance of the selected command.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Checks run by `verify`; all of them when omitted.
    #[serde(default)]
    pub checks: Option<Vec<CheckId>>,
    /// Quantities monitored by `simulate`; all of them for two copies when omitted.
    #[serde(default)]
    pub conserved: Option<Vec<ConservedQuantityId>>,
}

fn standard_coefficients() -> [String; 5] {
    CoeffSet::standard().sources().clone()
}

fn default_seed() -> u64 {
    1
}

fn default_samples() -> usize {
    100
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::at("", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::at(path, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.samples == 0 {
            return Err(ConfigError::at("samples", "must be at least 1"));
        }
        if let Some(tol) = self.tolerance {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(ConfigError::at("tolerance", format!("{tol} is not a positive finite number")));
            }
        }
        self.coeffs()?;
        self.points()?;
        self.integrator.validate().map_err(|e| ConfigError::at("integrator", e))?;
        let n = &self.newton;
        if !(n.tol > 0.0 && n.step_tol > 0.0 && n.chart_floor > 0.0) || n.max_iter == 0 {
            return Err(ConfigError::at("newton", "tolerances must be positive and max_iter at least 1"));
        }
        if matches!(&self.checks, Some(c) if c.is_empty()) {
            return Err(ConfigError::at("checks", "empty list"));
        }
        Ok(())
    }

    pub fn coeffs(&self) -> Result<CoeffSet, ConfigError> {
        CoeffSet::parse(&self.coefficients).map_err(|(k, e)| ConfigError::at(format!("coefficients[{}]", k - 1), e))
    }

    pub fn points(&self) -> Result<Vec<Point5>, ConfigError> {
        self.initial
            .iter()
            .enumerate()
            .map(|(i, c)| Point5::from_coords(*c).map_err(|e| ConfigError::at(format!("initial[{i}]"), e)))
            .collect()
    }

    /// The initial condition, requiring between `min` and `max` copies.
    pub fn prolonged(&self, min: usize, max: usize) -> Result<ProlongedPoint, ConfigError> {
        let pts = self.points()?;
        if pts.len() < min {
            let what = if min == 2 { "second " } else { "" };
            return Err(ConfigError::at(
                format!("initial[{}]", pts.len()),
                format!("missing {what}initial condition ({min} required)"),
            ));
        }
        if pts.len() > max {
            return Err(ConfigError::at("initial", format!("at most {max} initial conditions, got {}", pts.len())));
        }
        ProlongedPoint::new(pts).map_err(|e| ConfigError::at("initial", e))
    }

    pub fn tolerance_or(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c.seed, 1);
        assert_eq!(c.samples, 100);
        assert_eq!(c.coefficients, *CoeffSet::standard().sources());
        assert!(c.initial.is_empty());
    }

    #[test]
    fn unknown_key_has_path() {
        let e = RunConfig::from_json(r#"{"integrator": {"rtol": 1e-8}}"#).unwrap_err();
        assert_eq!(e.path, "integrator.rtol");
        assert!(e.message.contains("unknown field"), "{e}");
        let e = RunConfig::from_json(r#"{"sed": 3}"#).unwrap_err();
        assert!(e.message.contains("sed"), "{e}");
    }

    #[test]
    fn type_errors_have_paths() {
        let e = RunConfig::from_json(r#"{"initial": [[0, 1, 0, 0, 0], [0, "y", 0, 0, 0]]}"#).unwrap_err();
        assert_eq!(e.path, "initial[1][1]");
        let e = RunConfig::from_json(r#"{"coefficients": ["1", "2", "3", "4"]}"#).unwrap_err();
        assert_eq!(e.path, "coefficients");
    }

    #[test]
    fn semantic_validation() {
        let e = RunConfig::from_json(r#"{"samples": 0}"#).unwrap_err();
        assert_eq!(e.path, "samples");
        let e = RunConfig::from_json(r#"{"initial": [[0, 0, 0, 0, 0]]}"#).unwrap_err();
        assert_eq!(e.path, "initial[0]");
        let e = RunConfig::from_json(r#"{"coefficients": ["1", "sin(", "0", "0", "0"]}"#).unwrap_err();
        assert_eq!(e.path, "coefficients[1]");
        let e = RunConfig::from_json(r#"{"tolerance": -1}"#).unwrap_err();
        assert_eq!(e.path, "tolerance");
        let e = RunConfig::from_json(r#"{"integrator": {"rel_tol": 0}}"#).unwrap_err();
        assert_eq!(e.path, "integrator");
    }

    #[test]
    fn copy_counts() {
        let c = RunConfig::from_json(r#"{"initial": [[0, 1, 0, 0, 0]]}"#).unwrap();
        assert_eq!(c.prolonged(1, 2).unwrap().m(), 1);
        let e = c.prolonged(2, 2).unwrap_err();
        assert_eq!(e.path, "initial[1]");
        assert!(e.message.contains("second"));
    }
}
