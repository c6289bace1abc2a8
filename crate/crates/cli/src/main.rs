use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use spde_pricing::analytics::implied_vol_put;
use spde_pricing::{BoundaryRule, Method, Scheme};
use spde_pricing_cli::config::{parse_config, Overrides};
use spde_pricing_cli::output::{emit_results, render, EmitOptions, Format};
use spde_pricing_cli::{failure_summary, run_rows, workers_from_env};

/// Put pricing under the Inverse-Gamma stochastic-volatility model.
///
/// Config values are decimals (0.20 = 20%); output IVs are in percent and
/// standard errors in basis points. Set SPDE_WORKERS to choose the number of
/// worker threads (default: all available cores).
#[derive(Debug, Parser)]
#[command(name = "spde-price", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Price the rows of a config file, with optional overrides.
    Price {
        #[arg(long)]
        config: PathBuf,
        /// mixed, full_mc or mixing
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        steps_per_day: Option<f64>,
        /// crank_nicolson or semi_implicit
        #[arg(long)]
        scheme: Option<Scheme>,
        /// forward or limits
        #[arg(long)]
        boundary: Option<BoundaryRule>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "text")]
        format: Format,
        /// Leave the runtime column empty (reproducible output).
        #[arg(long)]
        omit_runtime: bool,
    },
    /// Run a whole table and write it to a file.
    Table {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Leave the runtime column empty (reproducible output).
        #[arg(long)]
        omit_runtime: bool,
    },
    /// Black-Scholes implied volatility of a put price.
    ImpliedVol {
        #[arg(long)]
        price: f64,
        #[arg(long)]
        spot: f64,
        #[arg(long)]
        strike: f64,
        /// Continuously compounded rate, decimal.
        #[arg(long)]
        rate: f64,
        /// Years.
        #[arg(long)]
        maturity: f64,
    },
}

fn run_and_emit(
    config: PathBuf,
    overrides: Overrides,
    out: Option<PathBuf>,
    format: Format,
    opts: EmitOptions,
) -> anyhow::Result<()> {
    let cfgs = parse_config(&config, &overrides)?;
    let workers = workers_from_env().map_err(anyhow::Error::msg)?;
    let table = run_rows(&cfgs, workers)?;
    let failures = failure_summary(&table);
    if !failures.is_empty() {
        eprint!("{failures}");
        bail!(
            "{} of {} rows failed; no output written",
            table.failures().len(),
            table.rows.len()
        );
    }
    match out {
        Some(path) => emit_results(&table, format, &path, opts)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", render(&table, format, opts)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Price {
            config,
            method,
            paths,
            steps_per_day,
            scheme,
            boundary,
            seed,
            out,
            format,
            omit_runtime,
        } => run_and_emit(
            config,
            Overrides {
                method,
                scheme,
                boundary,
                steps_per_day,
                paths,
                seed,
            },
            out,
            format,
            EmitOptions { omit_runtime },
        ),
        Command::Table {
            config,
            out,
            format,
            omit_runtime,
        } => run_and_emit(
            config,
            Overrides::default(),
            Some(out),
            format,
            EmitOptions { omit_runtime },
        ),
        Command::ImpliedVol {
            price,
            spot,
            strike,
            rate,
            maturity,
        } => implied_vol_put(price, spot, strike, rate, maturity)
            .map(|iv| println!("{:.6}% ({iv:.10})", iv * 100.0))
            .map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
