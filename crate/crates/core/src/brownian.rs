//! Keyed Brownian increments and Euler–Maruyama paths.
//!
//! Every increment array is a pure function of `(seed, stream_id, path_index)`:
//! a ChaCha8 generator is keyed by the seed and stream id and positioned on
//! the ChaCha stream numbered by the path index. Path `k` therefore draws the
//! same numbers no matter which worker simulates it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::scalar::Scalar;

pub const TRADING_DAYS_PER_YEAR: f64 = 253.0;

/// Uniform time discretisation of `[0, maturity]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    pub n_steps: usize,
    pub dt: T,
    pub maturity: T,
}

impl<T: Scalar> TimeGrid<T> {
    /// `round(steps_per_day * 253 * maturity)` steps, rounding halves up,
    /// with at least one step.
    pub fn from_steps_per_day(maturity: T, steps_per_day: f64) -> Result<Self> {
        if !(steps_per_day > 0.0 && steps_per_day.is_finite()) {
            return Err(Error::invalid(
                "steps_per_day",
                "must be positive and finite",
            ));
        }
        let total = steps_per_day * TRADING_DAYS_PER_YEAR * maturity.to_f64_lossy();
        let n = (total + 0.5).floor().max(1.0);
        Self::with_steps(maturity, n as usize)
    }

    pub fn with_steps(maturity: T, n_steps: usize) -> Result<Self> {
        if !(maturity > T::zero() && maturity.is_finite()) {
            return Err(Error::invalid("maturity", "must be positive and finite"));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be at least 1"));
        }
        Ok(Self {
            n_steps,
            dt: maturity / T::from_usize_lossy(n_steps),
            maturity,
        })
    }

    /// Time of node `i`; the last node is exactly `maturity`.
    #[inline]
    pub fn time(&self, i: usize) -> T {
        if i == self.n_steps {
            self.maturity
        } else {
            T::from_usize_lossy(i) * self.dt
        }
    }
}

/// Increment stream driving `V` (and the correlated part of `X`).
pub const STREAM_VOL: u64 = 0;
/// Independent stream for the orthogonal part of `X`.
pub const STREAM_SPOT: u64 = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one `(seed, stream_id, path_index)` key.
pub fn keyed_rng(seed: u64, stream_id: u64, path_index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed ^ stream_id.wrapping_mul(0xD1B5_4A32_D192_ED03);
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path_index);
    rng
}

/// Fills `out` with i.i.d. `Normal(0, dt)` draws for the given key.
pub fn fill_increments<T: Scalar>(
    seed: u64,
    stream_id: u64,
    path_index: u64,
    dt: T,
    out: &mut [T],
) {
    let mut rng = keyed_rng(seed, stream_id, path_index);
    let sd = dt.sqrt();
    for db in out.iter_mut() {
        *db = T::sample_normal(&mut rng) * sd;
    }
}

/// `streams` arrays (1 or 2) of `grid.n_steps` increments each.
pub fn make_increments<T: Scalar>(
    seed: u64,
    path_index: u64,
    grid: &TimeGrid<T>,
    streams: usize,
) -> Result<Vec<Vec<T>>> {
    if !(1..=2).contains(&streams) {
        return Err(Error::invalid("streams", "must be 1 or 2"));
    }
    Ok((0..streams as u64)
        .map(|s| {
            let mut v = vec![T::zero(); grid.n_steps];
            fill_increments(seed, s, path_index, grid.dt, &mut v);
            v
        })
        .collect())
}

/// One Monte-Carlo draw: increments and the volatility path they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle<T> {
    pub db: Vec<T>,
    /// Present only for full two-dimensional simulation.
    pub db_hat: Option<Vec<T>>,
    /// `V_{t_i}` for `i = 0..=n_steps`.
    pub v: Vec<T>,
}

impl<T: Scalar> PathBundle<T> {
    pub fn simulate<M: ModelSpec<T>>(
        model: &M,
        v0: T,
        grid: &TimeGrid<T>,
        seed: u64,
        path_index: u64,
        with_spot_stream: bool,
    ) -> Result<Self> {
        let mut inc = make_increments(seed, path_index, grid, 1 + usize::from(with_spot_stream))?;
        let db_hat = if with_spot_stream { inc.pop() } else { None };
        let db = inc.pop().expect("vol stream");
        let v = euler_vol_path(model, v0, &db, grid)?;
        Ok(Self { db, db_hat, v })
    }

    pub fn n_steps(&self) -> usize {
        self.db.len()
    }
}

/// Writes the Euler–Maruyama path `V_{i+1} = V_i + alpha dt + beta dB_i` into `out`
/// (length `db.len() + 1`).
pub fn euler_vol_path_into<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    v0: T,
    db: &[T],
    grid: &TimeGrid<T>,
    out: &mut [T],
) -> Result<()> {
    if db.len() != grid.n_steps || out.len() != db.len() + 1 {
        return Err(Error::Dimension(format!(
            "expected {} increments and {} outputs, got {} and {}",
            grid.n_steps,
            grid.n_steps + 1,
            db.len(),
            out.len()
        )));
    }
    let dt = grid.dt;
    let mut v = v0;
    out[0] = v;
    for (i, &dbi) in db.iter().enumerate() {
        let t = grid.time(i);
        v = v + model.alpha(t, v) * dt + model.beta(t, v) * dbi;
        if !v.is_finite() {
            return Err(Error::NonFinitePath { step: i + 1 });
        }
        out[i + 1] = v;
    }
    Ok(())
}

pub fn euler_vol_path<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    v0: T,
    db: &[T],
    grid: &TimeGrid<T>,
) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); db.len() + 1];
    euler_vol_path_into(model, v0, db, grid, &mut out)?;
    Ok(out)
}

/// Joint Euler scheme for `(X, V)`; returns the terminal log-moneyness.
pub fn euler_joint_path<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    x0: T,
    v0: T,
    db: &[T],
    db_hat: &[T],
    grid: &TimeGrid<T>,
) -> Result<T> {
    if db.len() != grid.n_steps || db_hat.len() != grid.n_steps {
        return Err(Error::Dimension(format!(
            "expected {} increments per stream, got {} and {}",
            grid.n_steps,
            db.len(),
            db_hat.len()
        )));
    }
    let dt = grid.dt;
    let mut x = x0;
    let mut v = v0;
    for (i, (&dbi, &dbh)) in db.iter().zip(db_hat).enumerate() {
        let t = grid.time(i);
        let rho = model.rho(t);
        let rho_bar = (T::one() - rho * rho).sqrt();
        let x_next =
            x + model.mu(t, x, v) * dt + model.sigma(t, x, v) * (rho * dbi + rho_bar * dbh);
        let v_next = v + model.alpha(t, v) * dt + model.beta(t, v) * dbi;
        if !(x_next.is_finite() && v_next.is_finite()) {
            return Err(Error::NonFinitePath { step: i + 1 });
        }
        x = x_next;
        v = v_next;
    }
    Ok(x)
}
