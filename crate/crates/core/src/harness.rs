//! Experiment orchestration: expand table rows into pricing runs, resolve
//! benchmark references and compute absolute errors against them.

use std::collections::HashMap;
use std::time::Instant;

use crate::analytics::error_stats;
use crate::brownian::TimeGrid;
use crate::error::{Error, Result};
use crate::model::{inverse_gamma_model, InverseGammaParams};
use crate::pricers::{price_full_mc, price_mixed_with, price_mixing, Method, PricingResult};
use crate::spde::{BoundaryRule, Scheme, SpaceGrid, DEFAULT_SPACE_POINTS};

pub const DEFAULT_STEPS_PER_DAY: f64 = 24.0;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_PATHS: u64 = 10_000;

/// What a row's implied volatility is compared against.
#[derive(Debug, Clone, PartialEq)]
pub enum Benchmark {
    /// Another row of the same table, by name.
    Row(String),
    /// A fixed implied volatility (decimal), with an optional standard error in bp.
    Iv { iv: f64, se_bp: Option<f64> },
}

/// One table row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub params: InverseGammaParams<f64>,
    pub method: Method,
    /// Used by the mixed engine only.
    pub scheme: Scheme,
    /// Grid-end rule; used by the mixed engine only.
    pub boundary: BoundaryRule,
    pub steps_per_day: f64,
    pub n_paths: u64,
    pub m_points: usize,
    /// Base seed; the engine seed is derived per row by [`row_seed`].
    pub seed: u64,
    pub benchmark: Option<Benchmark>,
}

impl ExperimentConfig {
    /// Reference parameters with the documented defaults.
    pub fn new(name: impl Into<String>, params: InverseGammaParams<f64>, method: Method) -> Self {
        Self {
            name: name.into(),
            params,
            method,
            scheme: Scheme::CrankNicolson,
            boundary: BoundaryRule::default(),
            steps_per_day: DEFAULT_STEPS_PER_DAY,
            n_paths: DEFAULT_PATHS,
            m_points: DEFAULT_SPACE_POINTS,
            seed: DEFAULT_SEED,
            benchmark: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_paths < 1 {
            return Err(Error::invalid("n_paths", "must be at least 1"));
        }
        if !(self.steps_per_day > 0.0 && self.steps_per_day.is_finite()) {
            return Err(Error::invalid(
                "steps_per_day",
                "must be positive and finite",
            ));
        }
        if self.m_points < 3 {
            return Err(Error::invalid("m_points", "must be at least 3"));
        }
        if let Some(Benchmark::Iv { iv, .. }) = self.benchmark {
            if !(iv > 0.0 && iv < 5.0) {
                return Err(Error::invalid(
                    "benchmark_iv",
                    "must be a decimal in (0, 5)",
                ));
            }
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid<f64>> {
        TimeGrid::from_steps_per_day(self.params.maturity, self.steps_per_day)
    }
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    bytes.into_iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Engine seed for a row: the base seed mixed with a stable hash of
/// `(method, steps_per_day, n_paths)`.
pub fn row_seed(cfg: &ExperimentConfig) -> u64 {
    let key = cfg
        .method
        .as_str()
        .bytes()
        .chain(cfg.steps_per_day.to_bits().to_le_bytes())
        .chain(cfg.n_paths.to_le_bytes());
    let mut z = cfg.seed ^ fnv1a(key);
    z = (z ^ (z >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
    z = (z ^ (z >> 33)).wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    z ^ (z >> 33)
}

/// Prices one row. A fixed-IV benchmark fills the absolute error; row
/// references are resolved only by [`run_table`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<PricingResult> {
    let bench = match cfg.benchmark {
        Some(Benchmark::Iv { iv, .. }) => Some(iv),
        _ => None,
    };
    run_against(cfg, bench)
}

fn run_against(cfg: &ExperimentConfig, benchmark_iv: Option<f64>) -> Result<PricingResult> {
    let annotate = |e: Error| Error::Row {
        row: cfg.name.clone(),
        source: Box::new(e),
    };
    cfg.validate().map_err(annotate)?;
    let p = cfg.params;
    let model = inverse_gamma_model(p).map_err(annotate)?;
    let tg = cfg.time_grid().map_err(annotate)?;
    let seed = row_seed(cfg);
    let started = Instant::now();
    let mut result = match cfg.method {
        Method::Mixed => {
            let grid = SpaceGrid::for_params(&p, cfg.m_points).map_err(annotate)?;
            price_mixed_with(
                &model,
                &p,
                &grid,
                &tg,
                cfg.n_paths,
                seed,
                cfg.scheme,
                cfg.boundary,
            )
        }
        Method::FullMc => price_full_mc(&model, &p, &tg, cfg.n_paths, seed),
        Method::Mixing => price_mixing(&model, &p, &tg, cfg.n_paths, seed),
    }
    .map_err(annotate)?;
    result.runtime_s = started.elapsed().as_secs_f64();
    result.abs_err_bp = match (result.implied_vol, benchmark_iv) {
        (Some(iv), Some(b)) => Some(error_stats(iv, b)),
        _ => None,
    };
    Ok(result)
}

/// Implied volatility and standard error of whatever a row was compared to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkValue {
    pub iv: f64,
    pub se_bp: Option<f64>,
}

#[derive(Debug)]
pub struct TableRow {
    pub config: ExperimentConfig,
    pub outcome: Result<PricingResult>,
    pub benchmark: Option<BenchmarkValue>,
}

#[derive(Debug)]
pub struct ResultTable {
    pub rows: Vec<TableRow>,
}

impl ResultTable {
    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.outcome.is_ok())
    }

    /// `(row name, error message)` for every failed row.
    pub fn failures(&self) -> Vec<(String, String)> {
        self.rows
            .iter()
            .filter_map(|r| {
                r.outcome
                    .as_ref()
                    .err()
                    .map(|e| (r.config.name.clone(), e.to_string()))
            })
            .collect()
    }
}

/// Execution order with every benchmark row before its dependents.
fn execution_order(cfgs: &[ExperimentConfig]) -> Result<Vec<usize>> {
    let mut by_name = HashMap::new();
    for (i, c) in cfgs.iter().enumerate() {
        if by_name.insert(c.name.as_str(), i).is_some() {
            return Err(Error::Config(format!("duplicate row name `{}`", c.name)));
        }
    }
    let deps: Vec<Option<usize>> =
        cfgs.iter()
            .map(|c| match &c.benchmark {
                Some(Benchmark::Row(name)) => by_name
                    .get(name.as_str())
                    .copied()
                    .map(Some)
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "row `{}` references unknown benchmark `{name}`",
                            c.name
                        ))
                    }),
                _ => Ok(None),
            })
            .collect::<Result<_>>()?;

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut marks = vec![Mark::New; cfgs.len()];
    let mut order = Vec::with_capacity(cfgs.len());
    for start in 0..cfgs.len() {
        // benchmark chains have out-degree one, so walk until a visited row
        let mut chain = Vec::new();
        let mut cur = Some(start);
        while let Some(i) = cur {
            match marks[i] {
                Mark::Done => break,
                Mark::Active => {
                    return Err(Error::Config(format!(
                        "cyclic benchmark reference through row `{}`",
                        cfgs[i].name
                    )))
                }
                Mark::New => {
                    marks[i] = Mark::Active;
                    chain.push(i);
                    cur = deps[i];
                }
            }
        }
        for &i in chain.iter().rev() {
            marks[i] = Mark::Done;
            order.push(i);
        }
    }
    Ok(order)
}

/// Runs every row, benchmarks first, and returns rows in input order.
///
/// Configuration problems (empty table, duplicate names, unknown or cyclic
/// benchmark references) fail the whole call; pricing failures are recorded
/// per row.
pub fn run_table(cfgs: &[ExperimentConfig]) -> Result<ResultTable> {
    if cfgs.is_empty() {
        return Err(Error::Config("empty table".into()));
    }
    let order = execution_order(cfgs)?;
    let mut outcomes: Vec<Option<(Result<PricingResult>, Option<BenchmarkValue>)>> =
        (0..cfgs.len()).map(|_| None).collect();
    let index: HashMap<&str, usize> = cfgs
        .iter()
        .enumerate()
        .map(|(i, c)| (c.name.as_str(), i))
        .collect();

    for i in order {
        let cfg = &cfgs[i];
        let bench: Result<Option<BenchmarkValue>> = match &cfg.benchmark {
            None => Ok(None),
            Some(Benchmark::Iv { iv, se_bp }) => Ok(Some(BenchmarkValue {
                iv: *iv,
                se_bp: *se_bp,
            })),
            Some(Benchmark::Row(name)) => {
                let j = index[name.as_str()];
                match &outcomes[j] {
                    Some((Ok(r), _)) => match r.implied_vol {
                        Some(iv) => Ok(Some(BenchmarkValue {
                            iv,
                            se_bp: r.std_error_iv_bp,
                        })),
                        None => Err(Error::Config(format!(
                            "benchmark row `{name}` has no implied volatility"
                        ))),
                    },
                    _ => Err(Error::Config(format!("benchmark row `{name}` failed"))),
                }
            }
        };
        let entry = match bench {
            Ok(b) => (run_against(cfg, b.map(|b| b.iv)), b),
            Err(e) => (
                Err(Error::Row {
                    row: cfg.name.clone(),
                    source: Box::new(e),
                }),
                None,
            ),
        };
        outcomes[i] = Some(entry);
    }

    let rows = cfgs
        .iter()
        .cloned()
        .zip(outcomes)
        .map(|(config, o)| {
            let (outcome, benchmark) = o.expect("every row executed");
            TableRow {
                config,
                outcome,
                benchmark,
            }
        })
        .collect();
    Ok(ResultTable { rows })
}
