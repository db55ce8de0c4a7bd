//! JSON experiment configuration: parsing, defaults, and full validation
//! against the core preconditions.

use std::fs;
use std::path::{Path, PathBuf};

use conelab_core::cone::ConeSpec;
use conelab_core::es::EsConfig;
use serde::{Deserialize, Serialize};

/// What the harness should do with the configured experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Simulate,
    IterateClosed,
    IterateExperimental,
    SteadyState,
    Compare,
}

/// The on-disk configuration document. Optional fields are filled with the
/// documented defaults at load time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cone: ConeSection,
    pub es: EsSection,
    #[serde(default = "defaults::repeats")]
    pub repeats: u32,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "defaults::tail_fraction")]
    pub tail_fraction: f64,
    /// Monte Carlo trials per generation for experimental-mode iteration.
    #[serde(default = "defaults::trials")]
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSection {
    pub n: usize,
    pub xi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsSection {
    pub mu: u32,
    pub lambda: u32,
    /// Cumulation parameter; defaults to `1/sqrt(N)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Damping; defaults to `1/c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default = "defaults::sigma0")]
    pub sigma0: f64,
    #[serde(default = "defaults::x0")]
    pub x0: f64,
    /// Defaults to one tenth of the boundary distance, `x0 / (10 sqrt(xi))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default = "defaults::max_gen")]
    pub max_gen: usize,
}

mod defaults {
    pub fn repeats() -> u32 {
        1
    }
    pub fn seed() -> u64 {
        1
    }
    pub fn tail_fraction() -> f64 {
        0.3
    }
    pub fn trials() -> u64 {
        1000
    }
    pub fn sigma0() -> f64 {
        1e-4
    }
    pub fn x0() -> f64 {
        100.0
    }
    pub fn max_gen() -> usize {
        1000
    }
}

/// A fully validated configuration with every default applied.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub cone: ConeSpec,
    pub es: EsConfig,
    pub repeats: u32,
    pub seed: u64,
    pub mode: Mode,
    pub output: Option<PathBuf>,
    pub tail_fraction: f64,
    pub trials: u64,
}

/// Configuration errors, with field-level context where available.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid cone section: {0}")]
    Cone(#[from] conelab_core::cone::ConeError),
    #[error("invalid es section: {0}")]
    Es(#[from] conelab_core::es::EsError),
    #[error("invalid field {field}: {message}")]
    Field {
        field: &'static str,
        message: &'static str,
    },
}

impl ExperimentConfig {
    /// Applies defaults and re-validates every core precondition.
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let cone = ConeSpec::new(self.cone.n, self.cone.xi)?;
        let c = self.es.c.unwrap_or(1.0 / (self.cone.n as f64).sqrt());
        let d = self.es.d.unwrap_or(1.0 / c);
        let es = EsConfig {
            mu: self.es.mu,
            lambda: self.es.lambda,
            c,
            d,
            sigma0: self.es.sigma0,
            x0: self.es.x0,
            r0: self
                .es
                .r0
                .unwrap_or_else(|| EsConfig::default_r0(&cone, self.es.x0)),
            max_gen: self.es.max_gen,
            seed: self.seed,
        };
        es.validate(&cone)?;
        if self.repeats < 1 {
            return Err(ConfigError::Field {
                field: "repeats",
                message: "must be at least 1",
            });
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(ConfigError::Field {
                field: "tail_fraction",
                message: "must be in (0, 1]",
            });
        }
        if self.trials < 1 {
            return Err(ConfigError::Field {
                field: "trials",
                message: "must be at least 1",
            });
        }
        Ok(ResolvedConfig {
            cone,
            es,
            repeats: self.repeats,
            seed: self.seed,
            mode: self.mode,
            output: self.output.clone(),
            tail_fraction: self.tail_fraction,
            trials: self.trials,
        })
    }
}

impl ResolvedConfig {
    /// Serializes back to the on-disk document form, with every applied
    /// default now explicit.
    pub fn dump(&self) -> ExperimentConfig {
        ExperimentConfig {
            cone: ConeSection {
                n: self.cone.n(),
                xi: self.cone.xi(),
            },
            es: EsSection {
                mu: self.es.mu,
                lambda: self.es.lambda,
                c: Some(self.es.c),
                d: Some(self.es.d),
                sigma0: self.es.sigma0,
                x0: self.es.x0,
                r0: Some(self.es.r0),
                max_gen: self.es.max_gen,
            },
            repeats: self.repeats,
            seed: self.seed,
            mode: self.mode,
            output: self.output.clone(),
            tail_fraction: self.tail_fraction,
            trials: self.trials,
        }
    }
}

/// Parses a JSON configuration document.
pub fn parse_config(text: &str) -> Result<ResolvedConfig, ConfigError> {
    let raw: ExperimentConfig = serde_json::from_str(text)?;
    raw.resolve()
}

/// Loads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ResolvedConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
