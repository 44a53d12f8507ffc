//! Run configuration files.
//!
//! ```json
//! {
//!   "s": {"kind": "tanh", "gain": 3.0},
//!   "r": {"kind": "tanh", "gain": -3.0},
//!   "u": {"kind": "affine", "slope": 1.0},
//!   "gamma": 0.2, "ebar": 0.5, "tau_x": 1.0, "tau_e": 1.0,
//!   "beta": 0.59,
//!   "graph": "triangle.json"
//! }
//! ```
//!
//! Unknown keys are rejected. An affine `u` without an `offset` gets
//! `gamma * ebar`, which makes the environment forcing odd; affine `s` and `r`
//! default to offset zero. A relative `graph` path is resolved against the
//! directory holding the configuration file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::model::{validate_config, ConfigIssue, ModelConfig, SmoothFunction};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Parse(String),
    #[error("invalid parameters: {}", join_issues(.0))]
    Invalid(Vec<ConfigIssue>),
}

fn join_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum FunctionSpec {
    Tanh { gain: f64 },
    Affine { slope: f64, offset: Option<f64> },
}

impl FunctionSpec {
    fn build(self, default_offset: f64) -> SmoothFunction {
        match self {
            FunctionSpec::Tanh { gain } => SmoothFunction::tanh(gain),
            FunctionSpec::Affine { slope, offset } => {
                SmoothFunction::affine(slope, offset.unwrap_or(default_offset))
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    s: FunctionSpec,
    r: FunctionSpec,
    u: FunctionSpec,
    gamma: f64,
    ebar: f64,
    tau_x: f64,
    tau_e: f64,
    beta: Option<f64>,
    graph: Option<PathBuf>,
}

/// A parsed configuration file. `beta` stays optional because most commands
/// take it from the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    base: ModelConfig,
    pub beta: Option<f64>,
    pub graph: Option<PathBuf>,
}

/// `beta` used for parameter validation when neither the file nor the caller supplies one.
const PLACEHOLDER_BETA: f64 = 0.5;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let base = ModelConfig {
            s: raw.s.build(0.0),
            r: raw.r.build(0.0),
            u: raw.u.build(raw.gamma * raw.ebar),
            beta: raw.beta.unwrap_or(PLACEHOLDER_BETA),
            gamma: raw.gamma,
            ebar: raw.ebar,
            tau_x: raw.tau_x,
            tau_e: raw.tau_e,
        };
        let report = validate_config(&base);
        if !report.is_ok() {
            return Err(ConfigError::Invalid(report.errors));
        }
        Ok(RunConfig {
            base,
            beta: raw.beta,
            graph: raw.graph,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(g) = &cfg.graph {
            if g.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.graph = Some(dir.join(g));
                }
            }
        }
        Ok(cfg)
    }

    /// Model with `beta` taken from `override_beta`, then the file, then 0.5.
    pub fn model(&self, override_beta: Option<f64>) -> Result<ModelConfig, ConfigError> {
        let beta = override_beta.or(self.beta).unwrap_or(PLACEHOLDER_BETA);
        let cfg = self.base.with_beta(beta);
        let report = validate_config(&cfg);
        if !report.is_ok() {
            return Err(ConfigError::Invalid(report.errors));
        }
        Ok(cfg)
    }

    /// Warnings from parameter validation, e.g. the threshold scale assumption.
    pub fn warnings(&self) -> Vec<String> {
        validate_config(&self.base).warnings
    }
}
