//! Black–Scholes put formulas, implied volatility and error statistics.

use crate::error::{Error, PriceBound, Result};
use crate::scalar::Scalar;

/// Lower end of the implied-volatility search interval.
pub const MIN_VOL: f64 = 1e-9;
/// Upper end of the implied-volatility search interval.
pub const MAX_VOL: f64 = 5.0;

/// Standard normal distribution function.
#[inline]
pub fn norm_cdf<T: Scalar>(z: T) -> T {
    T::lit(0.5) * (-z * T::FRAC_1_SQRT_2()).erfc()
}

#[inline]
pub fn norm_pdf<T: Scalar>(z: T) -> T {
    let inv_sqrt_2pi = T::FRAC_1_SQRT_2() * T::FRAC_2_SQRT_PI() * T::lit(0.5);
    inv_sqrt_2pi * (T::lit(-0.5) * z * z).exp()
}

/// Arguments of the two-argument put formula.
///
/// `x` is the effective spot, `y` the total variance `integral sigma^2 dt` and
/// `rate_integral` is `integral r dt` over the option's life.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsPutInputs<T> {
    pub x: T,
    pub y: T,
    pub strike: T,
    pub rate_integral: T,
}

impl<T: Scalar> BsPutInputs<T> {
    pub fn discount(&self) -> T {
        (-self.rate_integral).exp()
    }

    /// `(d_+, d_-)`.
    pub fn d_pm(&self) -> (T, T) {
        let sy = self.y.sqrt();
        let d_plus = ((self.x / self.strike).ln() + self.rate_integral) / sy + T::lit(0.5) * sy;
        (d_plus, d_plus - sy)
    }
}

/// `K e^{-R} N(-d_-) - x N(-d_+)`, with the `y = 0` and `x = 0` limits.
pub fn put_bs<T: Scalar>(inp: &BsPutInputs<T>) -> T {
    let kd = inp.strike * inp.discount();
    if inp.x <= T::zero() {
        return kd;
    }
    if inp.y <= T::zero() {
        return (kd - inp.x).max(T::zero());
    }
    let (d_plus, d_minus) = inp.d_pm();
    kd * norm_cdf(-d_minus) - inp.x * norm_cdf(-d_plus)
}

fn const_vol_inputs<T: Scalar>(s: T, k: T, r: T, t: T, vol: T) -> BsPutInputs<T> {
    BsPutInputs {
        x: s,
        y: vol * vol * t,
        strike: k,
        rate_integral: r * t,
    }
}

/// Constant-volatility European put.
pub fn bs_put_const_vol<T: Scalar>(s: T, k: T, r: T, t: T, vol: T) -> T {
    put_bs(&const_vol_inputs(s, k, r, t, vol))
}

/// Constant-volatility European call, built from the same distribution function.
pub fn bs_call_const_vol<T: Scalar>(s: T, k: T, r: T, t: T, vol: T) -> T {
    let inp = const_vol_inputs(s, k, r, t, vol);
    let kd = k * inp.discount();
    if inp.y <= T::zero() || s <= T::zero() {
        return (s - kd).max(T::zero());
    }
    let (d_plus, d_minus) = inp.d_pm();
    s * norm_cdf(d_plus) - kd * norm_cdf(d_minus)
}

/// `s phi(d_+) sqrt(t)`; zero in the degenerate limits.
pub fn bs_vega<T: Scalar>(s: T, k: T, r: T, t: T, vol: T) -> T {
    let inp = const_vol_inputs(s, k, r, t, vol);
    if inp.y <= T::zero() || s <= T::zero() {
        return T::zero();
    }
    s * norm_pdf(inp.d_pm().0) * t.sqrt()
}

/// Volatility in `[MIN_VOL, MAX_VOL]` reproducing `price`.
///
/// Newton iterations kept inside a shrinking bisection bracket; deep in- or
/// out-of-the-money vegas are tiny, so a Newton step that leaves the bracket
/// falls back to bisection.
pub fn implied_vol_put<T: Scalar>(price: T, s: T, k: T, r: T, t: T) -> Result<T> {
    if !(price.is_finite() && s > T::zero() && k > T::zero() && t > T::zero()) {
        return Err(Error::invalid(
            "price",
            "price, spot, strike and maturity must be finite with positive spot, strike, maturity",
        ));
    }
    let kd = k * (-r * t).exp();
    let intrinsic = (kd - s).max(T::zero());
    if price <= intrinsic {
        return Err(Error::PriceOutOfBand {
            price: price.to_f64_lossy(),
            bound: PriceBound::Lower,
            limit: intrinsic.to_f64_lossy(),
        });
    }
    if price >= kd {
        return Err(Error::PriceOutOfBand {
            price: price.to_f64_lossy(),
            bound: PriceBound::Upper,
            limit: kd.to_f64_lossy(),
        });
    }

    let f = |vol: T| bs_put_const_vol(s, k, r, t, vol) - price;
    let (mut lo, mut hi) = (T::lit(MIN_VOL), T::lit(MAX_VOL));
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo > T::zero() {
        return Err(Error::PriceOutOfBand {
            price: price.to_f64_lossy(),
            bound: PriceBound::Lower,
            limit: (f_lo + price).to_f64_lossy(),
        });
    }
    if f_hi < T::zero() {
        return Err(Error::PriceOutOfBand {
            price: price.to_f64_lossy(),
            bound: PriceBound::Upper,
            limit: (f_hi + price).to_f64_lossy(),
        });
    }

    let price_tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0) * price);
    let vol_tol = T::epsilon() * T::lit(4.0);
    let mut vol = T::lit(0.2).max(lo).min(hi);
    for _ in 0..200 {
        let fv = f(vol);
        if fv.abs() <= price_tol {
            return Ok(vol);
        }
        if fv < T::zero() {
            lo = vol;
        } else {
            hi = vol;
        }
        if hi - lo <= vol_tol * hi {
            return Ok(vol);
        }
        let vega = bs_vega(s, k, r, t, vol);
        let newton = vol - fv / vega;
        vol = if vega > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            T::lit(0.5) * (lo + hi)
        };
    }
    Ok(vol)
}

/// `|iv - benchmark_iv|` in basis points of volatility.
pub fn error_stats<T: Scalar>(iv: T, benchmark_iv: T) -> T {
    (iv - benchmark_iv).abs() * T::lit(1e4)
}
