//! Command-line front end for the `spde-pricing` engines: configuration
//! files, table runs and result output.

pub mod config;
pub mod output;

use spde_pricing::harness::{run_table, ExperimentConfig, ResultTable};
use spde_pricing::pricers::with_workers;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "SPDE_WORKERS";

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn workers_from_env() -> Result<usize, String> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!(
                "{WORKERS_ENV} must be a positive integer, got `{v}`"
            )),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs every row on a pool of `workers` threads.
pub fn run_rows(cfgs: &[ExperimentConfig], workers: usize) -> spde_pricing::Result<ResultTable> {
    with_workers(workers, || run_table(cfgs))?
}

/// One line per failed row, empty when every row succeeded.
pub fn failure_summary(table: &ResultTable) -> String {
    table
        .failures()
        .into_iter()
        .map(|(row, err)| format!("row `{row}` failed: {err}\n"))
        .collect()
}
