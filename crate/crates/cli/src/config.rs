//! Run configuration files.
//!
//! TOML is the canonical format; a file ending in `.json` is read as JSON
//! with the same schema. All rates, volatilities and benchmark IVs are
//! decimals (`0.20` means 20%); only the output shows percent.
//!
//! ```toml
//! [model]
//! s0 = 100.0
//! strike = 100.0
//! v0 = 0.20
//! maturity = 0.5
//! rate = 0.01
//! kappa = 5.0
//! theta = 0.18
//! lambda = 0.9
//! rho = -0.35
//!
//! # defaults for every row; each key may be overridden per row
//! [run]
//! method = "mixed"
//! scheme = "crank_nicolson"
//! steps_per_day = 24
//! paths = 10000
//! space_points = 250
//! seed = 42
//! boundary = "forward"
//!
//! [[row]]
//! name = "benchmark"
//! method = "mixing"
//! paths = 1000000
//!
//! [[row]]
//! name = "mixed 1/day"
//! steps_per_day = 1
//! paths = 20000
//! benchmark = "benchmark"
//! ```
//!
//! A file without `[[row]]` entries describes a single run built from `[run]`.

use std::path::Path;

use serde::Deserialize;
use spde_pricing::harness::{Benchmark, ExperimentConfig};
use spde_pricing::{BoundaryRule, InverseGammaParams, Method, Scheme};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        source: spde_pricing::Error,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    s0: f64,
    strike: f64,
    v0: f64,
    maturity: f64,
    rate: f64,
    kappa: f64,
    theta: f64,
    lambda: f64,
    rho: f64,
}

impl From<ModelSection> for InverseGammaParams {
    fn from(m: ModelSection) -> Self {
        InverseGammaParams {
            s0: m.s0,
            strike: m.strike,
            v0: m.v0,
            maturity: m.maturity,
            rate: m.rate,
            kappa: m.kappa,
            theta: m.theta,
            lambda: m.lambda,
            rho: m.rho,
        }
    }
}

/// Keys shared by `[run]` and `[[row]]`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    method: Option<String>,
    scheme: Option<String>,
    boundary: Option<String>,
    steps_per_day: Option<f64>,
    paths: Option<u64>,
    space_points: Option<usize>,
    seed: Option<u64>,
}

// `deny_unknown_fields` does not combine with `flatten`, so rows repeat the
// run keys instead of embedding `RunSection`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowSection {
    name: String,
    method: Option<String>,
    scheme: Option<String>,
    boundary: Option<String>,
    steps_per_day: Option<f64>,
    paths: Option<u64>,
    space_points: Option<usize>,
    seed: Option<u64>,
    /// Name of another row whose IV is the reference.
    benchmark: Option<String>,
    /// Fixed reference IV (decimal).
    benchmark_iv: Option<f64>,
    /// Standard error of `benchmark_iv`, in bp.
    benchmark_se_bp: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSchema {
    model: ModelSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    row: Vec<RowSection>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub method: Option<Method>,
    pub scheme: Option<Scheme>,
    pub boundary: Option<BoundaryRule>,
    pub steps_per_day: Option<f64>,
    pub paths: Option<u64>,
    pub seed: Option<u64>,
}

/// Reads `path` and returns one validated config per row, in file order.
pub fn parse_config(
    path: &Path,
    overrides: &Overrides,
) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: shown.clone(),
        source,
    })?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    parse_config_str(&text, is_json, overrides).map_err(|e| match e {
        ConfigError::Parse { message, .. } => ConfigError::Parse {
            path: shown.clone(),
            message,
        },
        ConfigError::Invalid { source, .. } => ConfigError::Invalid {
            path: shown.clone(),
            source,
        },
        other => other,
    })
}

/// As [`parse_config`], from text. Error paths read `<input>`.
pub fn parse_config_str(
    text: &str,
    is_json: bool,
    overrides: &Overrides,
) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let parse_err = |message: String| ConfigError::Parse {
        path: "<input>".into(),
        message,
    };
    let schema: FileSchema = if is_json {
        serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| parse_err(e.to_string()))?
    };
    build(schema, overrides).map_err(|source| ConfigError::Invalid {
        path: "<input>".into(),
        source,
    })
}

fn build(schema: FileSchema, overrides: &Overrides) -> spde_pricing::Result<Vec<ExperimentConfig>> {
    let params = InverseGammaParams::from(schema.model);
    let defaults = schema.run;
    let rows = if schema.row.is_empty() {
        vec![RowSection {
            name: "run".into(),
            ..RowSection::default()
        }]
    } else {
        schema.row
    };

    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let field = |name: &str, e: spde_pricing::Error| spde_pricing::Error::Row {
            row: row.name.clone(),
            source: Box::new(match e {
                spde_pricing::Error::Config(msg) => {
                    spde_pricing::Error::Config(format!("`{name}`: {msg}"))
                }
                other => other,
            }),
        };
        let r = &row;
        let method = match overrides.method {
            Some(m) => m,
            None => r
                .method
                .as_deref()
                .or(defaults.method.as_deref())
                .unwrap_or("mixed")
                .parse()
                .map_err(|e| field("method", e))?,
        };
        let mut cfg = ExperimentConfig::new(row.name.clone(), params, method);
        if let Some(s) = overrides.scheme {
            cfg.scheme = s;
        } else if let Some(s) = r.scheme.as_deref().or(defaults.scheme.as_deref()) {
            cfg.scheme = s.parse().map_err(|e| field("scheme", e))?;
        }
        if let Some(b) = overrides.boundary {
            cfg.boundary = b;
        } else if let Some(b) = r.boundary.as_deref().or(defaults.boundary.as_deref()) {
            cfg.boundary = b.parse().map_err(|e| field("boundary", e))?;
        }
        if let Some(v) = overrides
            .steps_per_day
            .or(r.steps_per_day)
            .or(defaults.steps_per_day)
        {
            cfg.steps_per_day = v;
        }
        if let Some(v) = overrides.paths.or(r.paths).or(defaults.paths) {
            cfg.n_paths = v;
        }
        if let Some(v) = r.space_points.or(defaults.space_points) {
            cfg.m_points = v;
        }
        if let Some(v) = overrides.seed.or(r.seed).or(defaults.seed) {
            cfg.seed = v;
        }
        cfg.benchmark = match (row.benchmark, row.benchmark_iv) {
            (Some(_), Some(_)) => {
                return Err(field(
                    "benchmark",
                    spde_pricing::Error::Config(
                        "set either `benchmark` or `benchmark_iv`, not both".into(),
                    ),
                ))
            }
            (Some(name), None) => Some(Benchmark::Row(name)),
            (None, Some(iv)) => Some(Benchmark::Iv {
                iv,
                se_bp: row.benchmark_se_bp,
            }),
            (None, None) => None,
        };
        cfg.validate().map_err(|e| spde_pricing::Error::Row {
            row: row.name.clone(),
            source: Box::new(e),
        })?;
        out.push(cfg);
    }
    Ok(out)
}
