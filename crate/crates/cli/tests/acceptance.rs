//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the summary is printed in
//! full even when every criterion passes; exits nonzero if any fails.
//!
//! Reference figures are the published benchmark: mixing-solution IV 18.872%
//! with standard error 1.20 bp (10^6 paths, 24 steps/day). Every Monte-Carlo
//! run uses the documented default base seed 42.

use std::process::{Command, ExitCode};

use spde_pricing::analytics::{bs_call_const_vol, bs_put_const_vol, implied_vol_put, norm_cdf};
use spde_pricing::brownian::{
    euler_joint_path, euler_vol_path, fill_increments, STREAM_SPOT, STREAM_VOL,
};
use spde_pricing::harness::{run_experiment, ExperimentConfig};
use spde_pricing::model::{integrated_variance_deterministic, inverse_gamma_model};
use spde_pricing::pricers::{mean_and_std, mixing_weight, price_mixed};
use spde_pricing::spde::{interpolate_at, payoff_put, BoundaryRule, DEFAULT_SPACE_POINTS};
use spde_pricing::{
    InverseGammaParams, Method, PathBundle, PricingResult, Scheme, SpaceGrid, SpdeSolver, TimeGrid,
};

const BENCHMARK_IV: f64 = 0.18872;
const BENCHMARK_SE_BP: f64 = 1.20;
/// Deterministic-volatility IV sqrt(int V^2 dt / T) for the reference
/// parameters with lambda = 0, from a high-precision quadrature oracle.
const DETERMINISTIC_IV: f64 = 0.187_411_462;
#[allow(clippy::excessive_precision)]
const DETERMINISTIC_IVAR: f64 = 0.017_561_528_084_101_622;

struct Verdict {
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Verdict, Box<dyn std::error::Error>>;

fn verdict(pass: bool, detail: String) -> Result<Verdict, Box<dyn std::error::Error>> {
    Ok(Verdict { pass, detail })
}

fn run(method: Method, steps_per_day: f64, n_paths: u64) -> spde_pricing::Result<PricingResult> {
    let mut cfg = ExperimentConfig::new(
        format!("{}-{steps_per_day}-{n_paths}", method.as_str()),
        InverseGammaParams::reference(),
        method,
    );
    cfg.steps_per_day = steps_per_day;
    cfg.n_paths = n_paths;
    run_experiment(&cfg)
}

fn iv_and_se(r: &PricingResult) -> Result<(f64, f64), Box<dyn std::error::Error>> {
    match (r.implied_vol, r.std_error_iv_bp) {
        (Some(iv), Some(se)) => Ok((iv, se)),
        _ => Err(format!("{} price {} has no implied vol", r.method, r.price).into()),
    }
}

fn c1_benchmark() -> Result<Verdict, Box<dyn std::error::Error>> {
    let r = run(Method::Mixing, 4.0, 100_000)?;
    let (iv, se) = iv_and_se(&r)?;
    let err = (iv - BENCHMARK_IV).abs() * 1e4;
    let tol = 3.0 * se;
    verdict(
        err < tol,
        format!(
            "mixing 100k/4 per day: IV {:.3}%, S.E. {se:.2} bp, |err| {err:.2} bp < {tol:.2} bp",
            iv * 100.0
        ),
    )
}

fn c2_mixed() -> Result<Verdict, Box<dyn std::error::Error>> {
    let r = run(Method::Mixed, 1.0, 20_000)?;
    let (iv, se) = iv_and_se(&r)?;
    let err = (iv - BENCHMARK_IV).abs() * 1e4;
    let tol = 3.0 * (se + BENCHMARK_SE_BP);
    verdict(
        err < tol,
        format!("mixed CN 250 nodes 20k/1 per day: IV {:.3}%, S.E. {se:.2} bp, |err| {err:.2} bp < {tol:.2} bp", iv * 100.0),
    )
}

fn c3_full_mc() -> Result<Verdict, Box<dyn std::error::Error>> {
    let r = run(Method::FullMc, 2.0, 80_000)?;
    let (iv, se) = iv_and_se(&r)?;
    let err = (iv - BENCHMARK_IV).abs() * 1e4;
    let tol = 3.0 * (se + BENCHMARK_SE_BP);
    verdict(
        err < tol,
        format!(
            "full MC 80k/2 per day: IV {:.3}%, S.E. {se:.2} bp, |err| {err:.2} bp < {tol:.2} bp",
            iv * 100.0
        ),
    )
}

fn deterministic_params(rho: f64) -> InverseGammaParams {
    InverseGammaParams {
        lambda: 0.0,
        rho,
        ..InverseGammaParams::reference()
    }
}

fn c4_deterministic_solve() -> Result<Verdict, Box<dyn std::error::Error>> {
    let p = deterministic_params(0.0);
    let ivar = integrated_variance_deterministic(&p);
    let closed = (ivar / p.maturity).sqrt();
    let m = inverse_gamma_model(p)?;
    let g = SpaceGrid::for_params(&p, DEFAULT_SPACE_POINTS)?;
    let tg = TimeGrid::from_steps_per_day(p.maturity, 4.0)?;
    let path = PathBundle::simulate(&m, p.v0, &tg, 42, 0, false)?;
    let u = SpdeSolver::for_put(g, p.strike, BoundaryRule::default()).solve_backward(
        Scheme::CrankNicolson,
        &m,
        &tg,
        &path,
        &payoff_put(&g, p.strike),
    )?;
    let price = p.discount() * interpolate_at(&g, &u, p.x0())?;
    let iv = implied_vol_put(price, p.s0, p.strike, p.rate, p.maturity)?;
    let err = (iv - closed).abs() * 1e4;
    let oracle_ok =
        (ivar - DETERMINISTIC_IVAR).abs() < 1e-15 && (closed - DETERMINISTIC_IV).abs() < 1e-9;
    verdict(
        err < 5.0 && oracle_ok,
        format!("one solve, 250 nodes, 4 per day: IV {:.4}% vs closed form {:.4}%, |err| {err:.2} bp < 5 bp", iv * 100.0, closed * 100.0),
    )
}

fn c5_deterministic_mixed() -> Result<Verdict, Box<dyn std::error::Error>> {
    let p = deterministic_params(-0.35);
    let closed = bs_put_const_vol(
        p.s0,
        p.strike,
        p.rate,
        p.maturity,
        (integrated_variance_deterministic(&p) / p.maturity).sqrt(),
    );
    let m = inverse_gamma_model(p)?;
    let g = SpaceGrid::for_params(&p, DEFAULT_SPACE_POINTS)?;
    let tg = TimeGrid::from_steps_per_day(p.maturity, 4.0)?;
    let r = price_mixed(&m, &p, &g, &tg, 10_000, 42, Scheme::CrankNicolson)?;
    let err = (r.price - closed).abs();
    let tol = 3.0 * r.std_error_price;
    verdict(
        err < tol,
        format!("mixed 10k, rho -0.35: price {:.5} vs closed form {closed:.5}, |err| {err:.5} < {tol:.5}", r.price),
    )
}

fn c6_triangle() -> Result<Verdict, Box<dyn std::error::Error>> {
    let results = [
        run(Method::Mixed, 2.0, 40_000)?,
        run(Method::FullMc, 2.0, 40_000)?,
        run(Method::Mixing, 2.0, 40_000)?,
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let (iv_a, se_a) = iv_and_se(&results[a])?;
        let (iv_b, se_b) = iv_and_se(&results[b])?;
        let diff = (iv_a - iv_b).abs() * 1e4;
        let tol = 3.0 * se_a.hypot(se_b);
        pass &= diff < tol;
        parts.push(format!(
            "{}-{} {diff:.1}<{tol:.1} bp",
            results[a].method, results[b].method
        ));
    }
    let (se_mixing, se_full) = (results[2].std_error_price, results[1].std_error_price);
    pass &= se_mixing < se_full;
    parts.push(format!(
        "price S.E. mixing {se_mixing:.5} < full MC {se_full:.5}"
    ));
    verdict(pass, format!("40k/2 per day: {}", parts.join(", ")))
}

fn c7_martingales() -> Result<Verdict, Box<dyn std::error::Error>> {
    let p = InverseGammaParams::reference();
    let m = inverse_gamma_model(p)?;
    let tg = TimeGrid::from_steps_per_day(p.maturity, 2.0)?;
    let n = 100_000u64;
    let mut db = vec![0.0; tg.n_steps];
    let mut db_hat = vec![0.0; tg.n_steps];
    let mut xi = Vec::with_capacity(n as usize);
    let mut spot = Vec::with_capacity(n as usize);
    for k in 0..n {
        fill_increments(42, STREAM_VOL, k, tg.dt, &mut db);
        let v = euler_vol_path(&m, p.v0, &db, &tg)?;
        xi.push(mixing_weight(&m, &tg, p.x0(), &v, &db).weight);
        fill_increments(42, STREAM_SPOT, k, tg.dt, &mut db_hat);
        spot.push(p.strike * euler_joint_path(&m, p.x0(), p.v0, &db, &db_hat, &tg)?.exp());
    }
    let (xi_mean, xi_sd) = mean_and_std(&xi);
    let xi_ok = (xi_mean - 1.0).abs() < 3.0 * xi_sd / (n as f64).sqrt();
    let (s_mean, s_sd) = mean_and_std(&spot);
    let fwd = p.s0 * (p.rate * p.maturity).exp();
    let s_ok = (s_mean - fwd).abs() < 3.0 * s_sd / (n as f64).sqrt();

    let phi_err = (0..=1600)
        .map(|i| -8.0 + i as f64 * 0.01)
        .map(|z| (norm_cdf(z) + norm_cdf(-z) - 1.0).abs())
        .fold(0.0, f64::max);
    let (mut parity_err, mut iv_err) = (0.0f64, 0.0f64);
    let cases: [(f64, f64, f64, f64); 4] = [
        (100.0, 100.0, 0.2, 0.5),
        (80.0, 100.0, 0.35, 1.0),
        (120.0, 90.0, 0.15, 0.25),
        (100.0, 130.0, 0.5, 2.0),
    ];
    for (s, k, vol, t) in cases {
        let r = 0.01;
        let put = bs_put_const_vol(s, k, r, t, vol);
        let call = bs_call_const_vol(s, k, r, t, vol);
        parity_err = parity_err.max((call - put - (s - k * (-r * t).exp())).abs());
        iv_err = iv_err.max((implied_vol_put(put, s, k, r, t)? - vol).abs());
    }
    let pass = xi_ok && s_ok && phi_err < 1e-14 && parity_err < 1e-10 && iv_err < 1e-9;
    verdict(
        pass,
        format!(
            "E[xi] {xi_mean:.5} ({}), E[S_T] {s_mean:.4} vs {fwd:.4} ({}), Phi sym {phi_err:.1e}, parity {parity_err:.1e}, IV trip {iv_err:.1e}",
            if xi_ok { "ok" } else { "off" },
            if s_ok { "ok" } else { "off" }
        ),
    )
}

fn c8_determinism() -> Result<Verdict, Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = dir.path().join("table.toml");
    std::fs::write(
        &config,
        r#"
[model]
s0 = 100.0
strike = 100.0
v0 = 0.2
maturity = 0.5
rate = 0.01
kappa = 5.0
theta = 0.18
lambda = 0.9
rho = -0.35

[run]
seed = 42

[[row]]
name = "benchmark"
method = "mixing"
steps_per_day = 4
paths = 5000

[[row]]
name = "mixed"
method = "mixed"
steps_per_day = 0.5
paths = 300
benchmark = "benchmark"

[[row]]
name = "full"
method = "full_mc"
steps_per_day = 2
paths = 5000
benchmark = "benchmark"
"#,
    )?;
    let mut outputs = Vec::new();
    for workers in [1, 2, 8] {
        for attempt in 0..2 {
            let out = dir.path().join(format!("w{workers}-{attempt}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_spde-price"))
                .args(["table", "--omit-runtime", "--config"])
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .env("SPDE_WORKERS", workers.to_string())
                .status()?;
            if !status.success() {
                return verdict(
                    false,
                    format!("run with {workers} workers exited with {status}"),
                );
            }
            outputs.push(std::fs::read(&out)?);
        }
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    let rows = String::from_utf8_lossy(&outputs[0]).lines().count() - 1;
    verdict(
        identical && rows == 3,
        format!("{} CSV files ({rows} rows each) from 1/2/8 workers x 2 runs byte-identical: {identical}", outputs.len()),
    )
}

fn c9_scheme_order() -> Result<Verdict, Box<dyn std::error::Error>> {
    // frozen coefficients: constant volatility, no stochastic increments
    let p = InverseGammaParams {
        kappa: 0.0,
        lambda: 0.0,
        ..InverseGammaParams::reference()
    };
    let m = inverse_gamma_model(p)?;
    let g = SpaceGrid::for_params(&p, DEFAULT_SPACE_POINTS)?;
    let payoff = payoff_put(&g, p.strike);
    let solve = |n: usize, scheme: Scheme| -> Result<Vec<f64>, Box<dyn std::error::Error>> {
        let tg = TimeGrid::with_steps(p.maturity, n)?;
        let path = PathBundle {
            db: vec![0.0; n],
            db_hat: None,
            v: vec![p.v0; n + 1],
        };
        Ok(SpdeSolver::for_put(g, p.strike, BoundaryRule::default())
            .solve_backward(scheme, &m, &tg, &path, &payoff)?)
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (scheme, lo, hi) in [
        (Scheme::CrankNicolson, 3.6, 4.4),
        (Scheme::SemiImplicit, 1.8, 2.2),
    ] {
        let reference = solve(8192, scheme)?;
        let errors = [64, 128, 256]
            .into_iter()
            .map(|n| {
                let u = solve(n, scheme)?;
                Ok(u.iter()
                    .zip(&reference)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max))
            })
            .collect::<Result<Vec<f64>, Box<dyn std::error::Error>>>()?;
        let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
        pass &= ratios.iter().all(|r| (lo..=hi).contains(r));
        parts.push(format!(
            "{scheme} ratios {:.2}, {:.2} in [{lo}, {hi}]",
            ratios[0], ratios[1]
        ));
    }
    verdict(pass, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("benchmark reproduction", c1_benchmark),
        ("mixed MC/PDE vs benchmark", c2_mixed),
        ("full MC vs benchmark", c3_full_mc),
        ("deterministic oracle, rho = 0", c4_deterministic_solve),
        ("deterministic oracle, rho = -0.35", c5_deterministic_mixed),
        ("cross-engine triangle", c6_triangle),
        ("martingale and normalization", c7_martingales),
        ("worker-count determinism", c8_determinism),
        ("scheme order", c9_scheme_order),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let v = check().unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!("error: {e}"),
        });
        failed += usize::from(!v.pass);
        println!(
            "criterion {} {} - {name}: {} [{:.1}s]",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            started.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
