//! The three put-pricing engines.
//!
//! * [`price_mixed`]: per simulated `(B, V)` path, solve the backward SPDE and
//!   read the layer at the initial log-moneyness; average and discount.
//! * [`price_full_mc`]: joint Euler simulation of `(X, V)`.
//! * [`price_mixing`]: per volatility path, a Black–Scholes price in the
//!   effective spot `S0 xi_T` and residual variance.
//!
//! Paths are distributed over the current rayon pool. Path `k` always uses
//! the increment streams keyed by `(seed, k)`, per-path values are collected in
//! path order and reduced by a fixed pairwise tree, so results are
//! bit-identical for any worker count.

use std::time::Instant;

use rayon::prelude::*;

use crate::analytics::{bs_vega, implied_vol_put, put_bs, BsPutInputs};
use crate::brownian::{
    euler_joint_path, euler_vol_path_into, fill_increments, TimeGrid, STREAM_SPOT, STREAM_VOL,
};
use crate::error::{Error, Result};
use crate::model::{InverseGammaParams, ModelSpec};
use crate::scalar::Scalar;
use crate::spde::{interpolate_at, payoff_put, BoundaryRule, Scheme, SpaceGrid, SpdeSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mixed,
    FullMc,
    Mixing,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mixed => "mixed",
            Method::FullMc => "full_mc",
            Method::Mixing => "mixing",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(Method::Mixed),
            "full_mc" | "full-mc" => Ok(Method::FullMc),
            "mixing" => Ok(Method::Mixing),
            other => Err(Error::Config(format!(
                "unknown method `{other}` (expected mixed, full_mc or mixing)"
            ))),
        }
    }
}

/// Outcome of one pricing run. Prices are in currency units, volatilities are
/// decimals, standard errors of volatility and absolute errors in basis points.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    pub method: Method,
    /// Only for the mixed engine.
    pub scheme: Option<Scheme>,
    pub price: f64,
    /// Sample standard deviation of the discounted per-path values over `sqrt(n_paths)`.
    pub std_error_price: f64,
    /// `None` when the price lies outside the put's no-arbitrage band.
    pub implied_vol: Option<f64>,
    pub std_error_iv_bp: Option<f64>,
    pub abs_err_bp: Option<f64>,
    pub n_paths: u64,
    pub n_steps: usize,
    /// Only for the mixed engine.
    pub m_points: Option<usize>,
    pub runtime_s: f64,
    pub seed: u64,
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Summation by a fixed binary tree over 64-element leaves.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// `(mean, sample standard deviation)`; the deviation is 0 for one sample.
pub fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0)).sqrt())
}

/// `integral_0^T r(t) dt` by left sums on the time grid (exact for a flat rate).
pub fn rate_integral<T: Scalar, M: ModelSpec<T>>(model: &M, grid: &TimeGrid<T>) -> T {
    (0..grid.n_steps).fold(T::zero(), |acc, i| acc + model.rate(grid.time(i)) * grid.dt)
}

fn check_paths(n_paths: u64) -> Result<()> {
    if n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be at least 1"));
    }
    Ok(())
}

/// Evaluates `path_value` for every path index in parallel, preserving order.
fn simulate<S, I, F>(n_paths: u64, init: I, path_value: F) -> Result<Vec<f64>>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> Result<f64> + Sync + Send,
{
    let values: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map_init(init, |state, k| {
            path_value(state, k).map_err(|e| Error::Path {
                path_index: k,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(values)
}

/// Aggregates discounted per-path values into a result.
fn finish(
    method: Method,
    values: &[f64],
    params: &InverseGammaParams<f64>,
    seed: u64,
    n_steps: usize,
    started: Instant,
) -> Result<PricingResult> {
    let (mean, std) = mean_and_std(values);
    if !(mean.is_finite() && std.is_finite()) {
        return Err(Error::NonFiniteAggregate(
            "mean or standard deviation of path values",
        ));
    }
    let se = std / (values.len() as f64).sqrt();
    let p = params;
    let implied_vol = implied_vol_put(mean, p.s0, p.strike, p.rate, p.maturity).ok();
    let std_error_iv_bp = implied_vol.map(|iv| {
        let vega = bs_vega(p.s0, p.strike, p.rate, p.maturity, iv);
        se / vega * 1e4
    });
    Ok(PricingResult {
        method,
        scheme: None,
        price: mean,
        std_error_price: se,
        implied_vol,
        std_error_iv_bp,
        abs_err_bp: None,
        n_paths: values.len() as u64,
        n_steps,
        m_points: None,
        runtime_s: started.elapsed().as_secs_f64(),
        seed,
    })
}

fn params_f64<T: Scalar>(p: &InverseGammaParams<T>) -> InverseGammaParams<f64> {
    InverseGammaParams {
        s0: p.s0.to_f64_lossy(),
        strike: p.strike.to_f64_lossy(),
        v0: p.v0.to_f64_lossy(),
        maturity: p.maturity.to_f64_lossy(),
        rate: p.rate.to_f64_lossy(),
        kappa: p.kappa.to_f64_lossy(),
        theta: p.theta.to_f64_lossy(),
        lambda: p.lambda.to_f64_lossy(),
        rho: p.rho.to_f64_lossy(),
    }
}

struct MixedWorkspace<T> {
    solver: SpdeSolver<T>,
    db: Vec<T>,
    v: Vec<T>,
    layer: Vec<T>,
    tmp: Vec<T>,
}

#[allow(clippy::too_many_arguments)]
fn mixed_value<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    params: &InverseGammaParams<T>,
    time_grid: &TimeGrid<T>,
    scheme: Scheme,
    ws: &mut MixedWorkspace<T>,
    payoff: &[T],
    seed: u64,
    path_index: u64,
) -> Result<T> {
    fill_increments(seed, STREAM_VOL, path_index, time_grid.dt, &mut ws.db);
    euler_vol_path_into(model, params.v0, &ws.db, time_grid, &mut ws.v)?;
    ws.solver.solve_backward_into(
        scheme,
        model,
        time_grid,
        &ws.v,
        &ws.db,
        payoff,
        &mut ws.layer,
        &mut ws.tmp,
    )?;
    interpolate_at(ws.solver.grid(), &ws.layer, params.x0())
}

/// Mixed Monte-Carlo / PDE price with the default [`BoundaryRule`].
pub fn price_mixed<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    params: &InverseGammaParams<T>,
    grid: &SpaceGrid<T>,
    time_grid: &TimeGrid<T>,
    n_paths: u64,
    seed: u64,
    scheme: Scheme,
) -> Result<PricingResult> {
    price_mixed_with(
        model,
        params,
        grid,
        time_grid,
        n_paths,
        seed,
        scheme,
        BoundaryRule::default(),
    )
}

/// Mixed Monte-Carlo / PDE price with an explicit grid-end rule.
#[allow(clippy::too_many_arguments)]
pub fn price_mixed_with<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    params: &InverseGammaParams<T>,
    grid: &SpaceGrid<T>,
    time_grid: &TimeGrid<T>,
    n_paths: u64,
    seed: u64,
    scheme: Scheme,
    boundary: BoundaryRule,
) -> Result<PricingResult> {
    let started = Instant::now();
    params.validate()?;
    check_paths(n_paths)?;
    let x0 = params.x0();
    if !(x0 >= grid.x_min && x0 <= grid.x_max) {
        return Err(Error::OutOfRange {
            x: x0.to_f64_lossy(),
            x_min: grid.x_min.to_f64_lossy(),
            x_max: grid.x_max.to_f64_lossy(),
        });
    }
    let payoff = payoff_put(grid, params.strike);
    let discount = (-rate_integral(model, time_grid)).exp().to_f64_lossy();
    let n = time_grid.n_steps;
    let m = grid.m_points;

    let values = simulate(
        n_paths,
        || MixedWorkspace {
            solver: SpdeSolver::for_put(*grid, params.strike, boundary),
            db: vec![T::zero(); n],
            v: vec![T::zero(); n + 1],
            layer: vec![T::zero(); m],
            tmp: vec![T::zero(); m],
        },
        |ws, k| {
            let u = mixed_value(model, params, time_grid, scheme, ws, &payoff, seed, k)?;
            Ok(discount * u.to_f64_lossy())
        },
    )?;
    let mut result = finish(
        Method::Mixed,
        &values,
        &params_f64(params),
        seed,
        n,
        started,
    )?;
    result.scheme = Some(scheme);
    result.m_points = Some(m);
    Ok(result)
}

/// Two-dimensional Euler Monte-Carlo price.
pub fn price_full_mc<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    params: &InverseGammaParams<T>,
    time_grid: &TimeGrid<T>,
    n_paths: u64,
    seed: u64,
) -> Result<PricingResult> {
    let started = Instant::now();
    params.validate()?;
    check_paths(n_paths)?;
    let discount = (-rate_integral(model, time_grid)).exp().to_f64_lossy();
    let n = time_grid.n_steps;
    let x0 = params.x0();

    let values = simulate(
        n_paths,
        || (vec![T::zero(); n], vec![T::zero(); n]),
        |(db, db_hat), k| {
            fill_increments(seed, STREAM_VOL, k, time_grid.dt, db);
            fill_increments(seed, STREAM_SPOT, k, time_grid.dt, db_hat);
            let x_t = euler_joint_path(model, x0, params.v0, db, db_hat, time_grid)?;
            let payoff = params.strike * (T::one() - x_t.exp()).max(T::zero());
            Ok(discount * payoff.to_f64_lossy())
        },
    )?;
    finish(
        Method::FullMc,
        &values,
        &params_f64(params),
        seed,
        n,
        started,
    )
}

/// Mixing-solution price: average of `Put_BS(S0 xi_T, integral sigma^2 (1 - rho^2))`.
///
/// Requires a spot volatility that does not depend on `x`; `sigma` is
/// evaluated at the initial log-moneyness.
pub fn price_mixing<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    params: &InverseGammaParams<T>,
    time_grid: &TimeGrid<T>,
    n_paths: u64,
    seed: u64,
) -> Result<PricingResult> {
    let started = Instant::now();
    params.validate()?;
    check_paths(n_paths)?;
    let n = time_grid.n_steps;
    let r_int = rate_integral(model, time_grid);
    let x0 = params.x0();

    let values = simulate(
        n_paths,
        || (vec![T::zero(); n], vec![T::zero(); n + 1]),
        |(db, v), k| {
            fill_increments(seed, STREAM_VOL, k, time_grid.dt, db);
            euler_vol_path_into(model, params.v0, db, time_grid, v)?;
            let xi = mixing_weight(model, time_grid, x0, v, db);
            let price = put_bs(&BsPutInputs {
                x: params.s0 * xi.weight,
                y: xi.residual_variance,
                strike: params.strike,
                rate_integral: r_int,
            });
            Ok(price.to_f64_lossy())
        },
    )?;
    finish(
        Method::Mixing,
        &values,
        &params_f64(params),
        seed,
        n,
        started,
    )
}

/// Path functionals entering the mixing formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingWeight<T> {
    /// `xi_T = exp(sum rho sigma dB - 1/2 sum rho^2 sigma^2 dt)`.
    pub weight: T,
    /// `sum sigma^2 (1 - rho^2) dt`.
    pub residual_variance: T,
}

/// Left-point (Ito) sums along one volatility path.
pub fn mixing_weight<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    time_grid: &TimeGrid<T>,
    x0: T,
    v: &[T],
    db: &[T],
) -> MixingWeight<T> {
    let dt = time_grid.dt;
    let (mut stoch, mut corr_var, mut resid_var) = (T::zero(), T::zero(), T::zero());
    for (i, &dbi) in db.iter().enumerate() {
        let t = time_grid.time(i);
        let rho = model.rho(t);
        let sigma = model.sigma(t, x0, v[i]);
        let s2dt = sigma * sigma * dt;
        stoch = stoch + rho * sigma * dbi;
        corr_var = corr_var + rho * rho * s2dt;
        resid_var = resid_var + (T::one() - rho * rho) * s2dt;
    }
    MixingWeight {
        weight: (stoch - T::lit(0.5) * corr_var).exp(),
        residual_variance: resid_var,
    }
}
