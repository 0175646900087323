//! Run configuration: JSON ingestion, defaults and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dbar::{SolverConfig, SpectralData};
use crate::geometry::C64;
use crate::spaces::NormParams;

/// A config problem, with the offending field named.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Zero,
    AnnulusBump,
    RationalDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplitudes {
    pub plus: C64,
    pub minus: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nr: usize,
    pub ntheta: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XGridConfig {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub exclude_zero: bool,
}

impl Default for XGridConfig {
    fn default() -> Self {
        Self {
            min: -4.0,
            max: 4.0,
            n: 64,
            exclude_zero: true,
        }
    }
}

impl XGridConfig {
    /// n equally spaced points from min to max inclusive.
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.min + i as f64 * h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    pub p: f64,
    pub q: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self { p: 8.0, q: 8.0 }
    }
}

/// Density and targets of the `cauchy` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CauchyConfig {
    pub density: CauchyDensity,
    pub targets: Vec<C64>,
    /// Cartesian cells across the bounding box for the brute-force oracle.
    pub oracle_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CauchyDensity {
    /// Indicator of the unit disk; T of it is conj(k) inside and 1/k outside.
    Indicator,
    RPlus,
    RMinus,
}

impl Default for CauchyConfig {
    fn default() -> Self {
        Self {
            density: CauchyDensity::Indicator,
            targets: vec![
                C64::new(0.3, 0.2),
                C64::new(-0.45, 0.1),
                C64::new(0.05, -0.6),
                C64::new(0.7, -0.35),
                C64::new(2.0, 0.0),
                C64::new(-1.2, 1.1),
            ],
            oracle_n: 512,
        }
    }
}

/// Settings of the `verify` command that are not shared with the others.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Grid for the randomized operator-norm estimate.
    pub norm_grid: GridConfig,
    pub trials: usize,
    pub pairs: usize,
    /// x step of the AKNS residual; the check halves it once.
    pub hx: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            norm_grid: GridConfig { nr: 16, ntheta: 32 },
            trials: 10,
            pairs: 500,
            hx: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Preset,
    pub amplitudes: Amplitudes,
    pub grid: GridConfig,
    pub x_grid: XGridConfig,
    pub norm: NormConfig,
    pub solver: SolverConfig,
    pub seed: u64,
    pub deterministic: bool,
    pub cauchy: CauchyConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: Preset::AnnulusBump,
            amplitudes: Amplitudes {
                plus: C64::new(0.5, 0.0),
                minus: C64::new(0.0, 0.5),
            },
            grid: GridConfig {
                nr: 64,
                ntheta: 256,
            },
            x_grid: XGridConfig::default(),
            norm: NormConfig::default(),
            solver: SolverConfig::default(),
            seed: 0,
            deterministic: false,
            cauchy: CauchyConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads and validates a JSON config; missing fields take their defaults.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("<file>", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            // a syntax error has no meaningful path
            let field = if path == "." || e.inner().is_syntax() || e.inner().is_eof() {
                "<root>".to_string()
            } else {
                path
            };
            ConfigError::new(&field, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [("grid.nr", self.grid.nr), ("grid.ntheta", self.grid.ntheta)] {
            if v < 2 {
                return Err(ConfigError::new(
                    field,
                    format!("must be at least 2, got {v}"),
                ));
            }
        }
        self.norm_params()?;
        let xg = &self.x_grid;
        if !xg.exclude_zero {
            return Err(ConfigError::new(
                "x_grid.exclude_zero",
                "x = 0 is not admissible; must be true",
            ));
        }
        if xg.n == 0 {
            return Err(ConfigError::new("x_grid.n", "must be at least 1"));
        }
        if !(xg.min.is_finite() && xg.max.is_finite()) || (xg.n > 1 && xg.min >= xg.max) {
            return Err(ConfigError::new(
                "x_grid",
                format!("need finite min < max, got [{}, {}]", xg.min, xg.max),
            ));
        }
        let points = xg.points();
        if let Some(x) = points.iter().find(|x| x.abs() < 1e-12) {
            return Err(ConfigError::new(
                "x_grid",
                format!("grid contains x = {x}; choose n or bounds that skip 0"),
            ));
        }
        let max_abs = points.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let needed = 64 * (max_abs.ceil() as usize);
        if self.grid.ntheta < needed {
            return Err(ConfigError::new(
                "grid.ntheta",
                format!("must be at least 64 * ceil(max |x|) = {needed} for max |x| = {max_abs}, got {}", self.grid.ntheta),
            ));
        }
        self.solver
            .validate()
            .map_err(|e| ConfigError::new("solver", e.to_string()))?;
        for (name, a) in [
            ("amplitudes.plus", self.amplitudes.plus),
            ("amplitudes.minus", self.amplitudes.minus),
        ] {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(ConfigError::new(name, "must be finite"));
            }
        }
        if self.cauchy.oracle_n < 64 {
            return Err(ConfigError::new(
                "cauchy.oracle_n",
                format!("must be at least 64, got {}", self.cauchy.oracle_n),
            ));
        }
        let v = &self.verify;
        if v.norm_grid.nr < 2 || v.norm_grid.ntheta < 2 {
            return Err(ConfigError::new(
                "verify.norm_grid",
                "both sizes must be at least 2",
            ));
        }
        if v.trials < 10 {
            return Err(ConfigError::new(
                "verify.trials",
                format!("must be at least 10, got {}", v.trials),
            ));
        }
        if v.pairs < 100 {
            return Err(ConfigError::new(
                "verify.pairs",
                format!("must be at least 100, got {}", v.pairs),
            ));
        }
        if !(v.hx > 0.0 && v.hx.is_finite()) {
            return Err(ConfigError::new("verify.hx", "must be positive"));
        }
        Ok(())
    }

    pub fn norm_params(&self) -> Result<NormParams, ConfigError> {
        let (p, q) = (self.norm.p, self.norm.q);
        for (field, v) in [("norm.p", p), ("norm.q", q)] {
            if !(v.is_finite() && v > 2.0) {
                return Err(ConfigError::new(field, format!("must exceed 2, got {v}")));
            }
        }
        NormParams::new(p, q).map_err(|_| {
            ConfigError::new(
                "norm",
                format!(
                    "need 1/p + 1/q < 1/2, got 1/{p} + 1/{q} = {}",
                    1.0 / p + 1.0 / q
                ),
            )
        })
    }

    pub fn data(&self) -> SpectralData {
        let Amplitudes { plus, minus } = self.amplitudes;
        match self.preset {
            Preset::Zero => SpectralData::zero(),
            Preset::AnnulusBump => SpectralData::annulus_bump(plus, minus),
            Preset::RationalDecay => SpectralData::rational_decay(plus, minus),
        }
    }

    /// SHA-256 of the normalized config (defaults filled in, fixed key order).
    pub fn hash(&self) -> String {
        let body = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(body.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        let p = c.norm_params().unwrap();
        assert_eq!((p.p, p.q), (8.0, 8.0));
        assert!((p.alpha - 0.5).abs() < 1e-15);
        assert_eq!(c.x_grid.points().len(), 64);
    }

    #[test]
    fn inadmissible_exponents_name_the_field() {
        let e = RunConfig::from_json(r#"{"norm": {"p": 3, "q": 3}}"#).unwrap_err();
        assert_eq!(e.field, "norm");
        let e = RunConfig::from_json(r#"{"norm": {"p": 2, "q": 8}}"#).unwrap_err();
        assert_eq!(e.field, "norm.p");
    }

    #[test]
    fn zero_in_x_grid_rejected() {
        let e = RunConfig::from_json(r#"{"x_grid": {"min": -1, "max": 1, "n": 5}}"#).unwrap_err();
        assert_eq!(e.field, "x_grid");
        let e = RunConfig::from_json(r#"{"x_grid": {"exclude_zero": false}}"#).unwrap_err();
        assert_eq!(e.field, "x_grid.exclude_zero");
    }

    #[test]
    fn angular_resolution_must_follow_x() {
        let e = RunConfig::from_json(r#"{"grid": {"nr": 32, "ntheta": 128}}"#).unwrap_err();
        assert_eq!(e.field, "grid.ntheta");
        let ok = r#"{"grid": {"nr": 32, "ntheta": 128}, "x_grid": {"min": -2, "max": 2, "n": 8}}"#;
        assert!(RunConfig::from_json(ok).is_ok());
    }

    #[test]
    fn type_errors_and_unknown_fields_name_the_path() {
        let e = RunConfig::from_json(r#"{"grid": {"nr": "many", "ntheta": 256}}"#).unwrap_err();
        assert_eq!(e.field, "grid.nr");
        let e = RunConfig::from_json(r#"{"solver": {"tol": 1e-8, "max_iter": 10, "extra": 1}}"#)
            .unwrap_err();
        assert_eq!(e.field, "solver.extra");
        let e = RunConfig::from_json(r#"{"preset": "soliton"}"#).unwrap_err();
        assert_eq!(e.field, "preset");
        let e = RunConfig::from_json("{ not json").unwrap_err();
        assert_eq!(e.field, "<root>");
    }

    #[test]
    fn hash_depends_on_content_only() {
        let a = RunConfig::from_json(r#"{"seed": 3}"#).unwrap();
        let b = RunConfig::from_json(r#"{ "seed" : 3 }"#).unwrap();
        let c = RunConfig::from_json(r#"{"seed": 4}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
