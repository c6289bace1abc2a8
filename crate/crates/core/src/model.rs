//! Coefficient functions of the spot / volatility diffusion system.
//!
//! The log-spot `X` and the auxiliary volatility `V` follow
//!
//! ```text
//! dX = mu(t, X, V) dt + sigma(t, X, V) (rho dB + sqrt(1 - rho^2) dB_hat)
//! dV = alpha(t, V) dt + beta(t, V) dB
//! ```
//!
//! with `B`, `B_hat` independent Brownian motions and a deterministic short
//! rate. [`InverseGammaModel`] is the concrete model used throughout the
//! experiments; [`FnModel`] wraps arbitrary closures.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Coefficients of the diffusion system. All volatilities are decimals.
pub trait ModelSpec<T: Scalar>: Send + Sync {
    /// Drift of `X` per year.
    fn mu(&self, t: T, x: T, v: T) -> T;
    /// Diffusion coefficient of `X` per square-root year.
    fn sigma(&self, t: T, x: T, v: T) -> T;
    /// Partial derivative of [`ModelSpec::sigma`] with respect to `v`.
    fn sigma_y(&self, t: T, x: T, v: T) -> T;
    /// Drift of `V` per year.
    fn alpha(&self, t: T, v: T) -> T;
    /// Diffusion coefficient of `V` per square-root year.
    fn beta(&self, t: T, v: T) -> T;
    /// Instantaneous correlation between the drivers of `X` and `V`.
    fn rho(&self, t: T) -> T;
    /// Deterministic short rate per year.
    fn rate(&self, t: T) -> T;
    /// `true` when `mu`, `sigma` and `sigma_y` ignore their `x` argument.
    /// Lets the grid solver evaluate the coefficients once per time level.
    fn is_space_homogeneous(&self) -> bool {
        false
    }
}

impl<T: Scalar, M: ModelSpec<T> + ?Sized> ModelSpec<T> for &M {
    fn mu(&self, t: T, x: T, v: T) -> T {
        (**self).mu(t, x, v)
    }
    fn sigma(&self, t: T, x: T, v: T) -> T {
        (**self).sigma(t, x, v)
    }
    fn sigma_y(&self, t: T, x: T, v: T) -> T {
        (**self).sigma_y(t, x, v)
    }
    fn alpha(&self, t: T, v: T) -> T {
        (**self).alpha(t, v)
    }
    fn beta(&self, t: T, v: T) -> T {
        (**self).beta(t, v)
    }
    fn rho(&self, t: T) -> T {
        (**self).rho(t)
    }
    fn rate(&self, t: T) -> T {
        (**self).rate(t)
    }
    fn is_space_homogeneous(&self) -> bool {
        (**self).is_space_homogeneous()
    }
}

/// Constant-parameter Inverse-Gamma stochastic volatility model with a
/// European put of strike `strike` on spot `s0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGammaParams<T> {
    pub s0: T,
    pub strike: T,
    pub v0: T,
    /// Years.
    pub maturity: T,
    pub rate: T,
    pub kappa: T,
    pub theta: T,
    pub lambda: T,
    pub rho: T,
}

impl<T: Scalar> InverseGammaParams<T> {
    /// Parameter set used for every experiment: six-month at-the-money put.
    pub fn reference() -> Self {
        Self {
            s0: T::lit(100.0),
            strike: T::lit(100.0),
            v0: T::lit(0.20),
            maturity: T::lit(0.5),
            rate: T::lit(0.01),
            kappa: T::lit(5.0),
            theta: T::lit(0.18),
            lambda: T::lit(0.9),
            rho: T::lit(-0.35),
        }
    }

    /// `v0` and `kappa` may be zero (degenerate oracle configurations); `lambda`
    /// and `theta` may be zero; everything else must be strictly positive.
    pub fn validate(&self) -> Result<()> {
        fn check<T: Scalar>(field: &'static str, v: T, ok: bool, what: &str) -> Result<()> {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
            if !ok {
                return Err(Error::invalid(field, format!("must be {what}, got {v}")));
            }
            Ok(())
        }
        let zero = T::zero();
        check("s0", self.s0, self.s0 > zero, "> 0")?;
        check("strike", self.strike, self.strike > zero, "> 0")?;
        check("v0", self.v0, self.v0 >= zero, ">= 0")?;
        check("maturity", self.maturity, self.maturity > zero, "> 0")?;
        check("rate", self.rate, true, "finite")?;
        check("kappa", self.kappa, self.kappa >= zero, ">= 0")?;
        check("theta", self.theta, self.theta >= zero, ">= 0")?;
        check("lambda", self.lambda, self.lambda >= zero, ">= 0")?;
        check(
            "rho",
            self.rho,
            self.rho > -T::one() && self.rho < T::one(),
            "in (-1, 1)",
        )?;
        Ok(())
    }

    /// Initial log-moneyness `ln(s0 / strike)`.
    pub fn x0(&self) -> T {
        (self.s0 / self.strike).ln()
    }

    pub fn discount(&self) -> T {
        (-self.rate * self.maturity).exp()
    }
}

/// Inverse-Gamma model in log-moneyness coordinates:
/// `mu = r - v^2/2`, `sigma = v`, `alpha = kappa (theta - v)`, `beta = lambda v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGammaModel<T> {
    params: InverseGammaParams<T>,
}

impl<T: Scalar> InverseGammaModel<T> {
    pub fn params(&self) -> &InverseGammaParams<T> {
        &self.params
    }
}

/// Builds the log-coordinate model for `p` after validating it.
pub fn inverse_gamma_model<T: Scalar>(p: InverseGammaParams<T>) -> Result<InverseGammaModel<T>> {
    p.validate()?;
    Ok(InverseGammaModel { params: p })
}

impl<T: Scalar> ModelSpec<T> for InverseGammaModel<T> {
    #[inline]
    fn mu(&self, _t: T, _x: T, v: T) -> T {
        self.params.rate - T::lit(0.5) * v * v
    }
    #[inline]
    fn sigma(&self, _t: T, _x: T, v: T) -> T {
        v
    }
    #[inline]
    fn sigma_y(&self, _t: T, _x: T, _v: T) -> T {
        T::one()
    }
    #[inline]
    fn alpha(&self, _t: T, v: T) -> T {
        self.params.kappa * (self.params.theta - v)
    }
    #[inline]
    fn beta(&self, _t: T, v: T) -> T {
        self.params.lambda * v
    }
    #[inline]
    fn rho(&self, _t: T) -> T {
        self.params.rho
    }
    #[inline]
    fn rate(&self, _t: T) -> T {
        self.params.rate
    }
    fn is_space_homogeneous(&self) -> bool {
        true
    }
}

/// Closed-form volatility when `lambda` is treated as zero:
/// `V_t = theta + (v0 - theta) e^{-kappa t}`.
pub fn deterministic_vol_path<T: Scalar>(p: &InverseGammaParams<T>, t: T) -> T {
    p.theta + (p.v0 - p.theta) * (-p.kappa * t).exp()
}

/// `integral_0^T V_r^2 dr` for the deterministic (`lambda = 0`) path.
pub fn integrated_variance_deterministic<T: Scalar>(p: &InverseGammaParams<T>) -> T {
    let t = p.maturity;
    let a = p.v0 - p.theta;
    // (1 - e^{-c T}) / c, continuous at c = 0
    let decay = |c: T| {
        if c == T::zero() {
            t
        } else {
            -(-c * t).exp_m1() / c
        }
    };
    p.theta * p.theta * t
        + T::lit(2.0) * p.theta * a * decay(p.kappa)
        + a * a * decay(T::lit(2.0) * p.kappa)
}

type Coef3<T> = Box<dyn Fn(T, T, T) -> T + Send + Sync>;
type Coef2<T> = Box<dyn Fn(T, T) -> T + Send + Sync>;
type Coef1<T> = Box<dyn Fn(T) -> T + Send + Sync>;

/// Model assembled from closures. Useful for degenerate configurations and
/// for models other than Inverse-Gamma.
pub struct FnModel<T> {
    pub mu: Coef3<T>,
    pub sigma: Coef3<T>,
    pub sigma_y: Coef3<T>,
    pub alpha: Coef2<T>,
    pub beta: Coef2<T>,
    pub rho: Coef1<T>,
    pub rate: Coef1<T>,
}

impl<T: Scalar> FnModel<T> {
    /// Constant-coefficient model: `mu`, `sigma` fixed, no volatility dynamics.
    pub fn constant(mu: T, sigma: T, rho: T, rate: T) -> Self {
        Self {
            mu: Box::new(move |_, _, _| mu),
            sigma: Box::new(move |_, _, _| sigma),
            sigma_y: Box::new(|_, _, _| T::zero()),
            alpha: Box::new(|_, _| T::zero()),
            beta: Box::new(|_, _| T::zero()),
            rho: Box::new(move |_| rho),
            rate: Box::new(move |_| rate),
        }
    }
}

impl<T: Scalar> ModelSpec<T> for FnModel<T> {
    fn mu(&self, t: T, x: T, v: T) -> T {
        (self.mu)(t, x, v)
    }
    fn sigma(&self, t: T, x: T, v: T) -> T {
        (self.sigma)(t, x, v)
    }
    fn sigma_y(&self, t: T, x: T, v: T) -> T {
        (self.sigma_y)(t, x, v)
    }
    fn alpha(&self, t: T, v: T) -> T {
        (self.alpha)(t, v)
    }
    fn beta(&self, t: T, v: T) -> T {
        (self.beta)(t, v)
    }
    fn rho(&self, t: T) -> T {
        (self.rho)(t)
    }
    fn rate(&self, t: T) -> T {
        (self.rate)(t)
    }
}

impl<T> std::fmt::Debug for FnModel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnModel").finish_non_exhaustive()
    }
}
