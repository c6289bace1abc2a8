//! Finite-difference solver for the backward pricing SPDE
//!
//! ```text
//! -du = (L - C) u dt + B u d'B,   u(T, x) = payoff(x)
//! L = 1/2 sigma^2 d_xx + mu d_x,  B = rho sigma d_x,  C = rho beta sigma_y d_x
//! ```
//!
//! driven by one simulated `(B, V)` path. The stochastic term is discretised
//! at the right end point of each step, i.e. with coefficients at `t_{i+1}`
//! applied to the already-known layer `u^{i+1}`.

mod solver;
mod tridiag;

pub use solver::{
    forward_left_value, solve_backward, step_crank_nicolson, step_semi_implicit, SpdeSolver,
    StepInputs,
};
pub use tridiag::{thomas_solve, thomas_solve_in_place, TridiagonalSystem};

#[cfg(test)]
pub(crate) use tridiag::dense;

use crate::error::{Error, Result};
use crate::model::{InverseGammaParams, ModelSpec};
use crate::scalar::Scalar;

/// Number of space nodes used by every experiment.
pub const DEFAULT_SPACE_POINTS: usize = 250;

/// Uniform grid in log-moneyness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid<T> {
    pub x_min: T,
    pub x_max: T,
    pub m_points: usize,
    pub dx: T,
}

impl<T: Scalar> SpaceGrid<T> {
    pub fn new(x_min: T, x_max: T, m_points: usize) -> Result<Self> {
        if m_points < 3 {
            return Err(Error::invalid("m_points", "must be at least 3"));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::invalid(
                "x_max",
                "grid bounds must be finite with x_max > x_min",
            ));
        }
        Ok(Self {
            x_min,
            x_max,
            m_points,
            dx: (x_max - x_min) / T::from_usize_lossy(m_points - 1),
        })
    }

    /// `[x0 - half_width, x0 + half_width]` with `m_points` nodes.
    pub fn centered(x0: T, half_width: T, m_points: usize) -> Result<Self> {
        Self::new(x0 - half_width, x0 + half_width, m_points)
    }

    /// Default span `x0 +/- 4 v0 sqrt(T)` around the initial log-moneyness.
    pub fn for_params(p: &InverseGammaParams<T>, m_points: usize) -> Result<Self> {
        Self::centered(p.x0(), T::lit(4.0) * p.v0 * p.maturity.sqrt(), m_points)
    }

    #[inline]
    pub fn node(&self, j: usize) -> T {
        if j + 1 == self.m_points {
            self.x_max
        } else {
            self.x_min + T::from_usize_lossy(j) * self.dx
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.m_points).map(|j| self.node(j)).collect()
    }
}

/// Dirichlet values held at the two ends of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundaries<T> {
    pub left: T,
    pub right: T,
}

impl<T: Scalar> Boundaries<T> {
    /// Undiscounted put limits: `K` as `x -> -inf`, `0` as `x -> +inf`.
    pub fn put(strike: T) -> Self {
        Self {
            left: strike,
            right: T::zero(),
        }
    }
}

/// How the Dirichlet values at the grid ends are set for a put.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BoundaryRule {
    /// The limits `K` (as `x -> -inf`) and `0` (as `x -> +inf`), held at the
    /// grid ends at every time level.
    Limits,
    /// Left end tracks the deep in-the-money value `K (1 - e^{x_min + int_t^T r})`,
    /// which matches the payoff at maturity and tends to `K` as `x_min -> -inf`;
    /// right end `0`. Removes the truncation bias of [`BoundaryRule::Limits`]
    /// on narrow grids.
    #[default]
    Forward,
}

impl BoundaryRule {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryRule::Limits => "limits",
            BoundaryRule::Forward => "forward",
        }
    }
}

impl std::fmt::Display for BoundaryRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoundaryRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "limits" | "limit" => Ok(BoundaryRule::Limits),
            "forward" => Ok(BoundaryRule::Forward),
            other => Err(Error::Config(format!(
                "unknown boundary rule `{other}` (expected `limits` or `forward`)"
            ))),
        }
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    SemiImplicit,
    CrankNicolson,
}

impl Scheme {
    /// Weight of the implicit operator.
    pub(crate) fn implicit_weight<T: Scalar>(self) -> T {
        match self {
            Scheme::SemiImplicit => T::one(),
            Scheme::CrankNicolson => T::lit(0.5),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::SemiImplicit => "semi_implicit",
            Scheme::CrankNicolson => "crank_nicolson",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi_implicit" | "semi-implicit" => Ok(Scheme::SemiImplicit),
            "crank_nicolson" | "crank-nicolson" | "cn" => Ok(Scheme::CrankNicolson),
            other => Err(Error::Config(format!(
                "unknown scheme `{other}` (expected semi_implicit or crank_nicolson)"
            ))),
        }
    }
}

/// Stencil for every first derivative (drift part of `L`, `B` and `C`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FirstDerivative {
    /// `(u_{j+1} - u_j) / dx`
    #[default]
    Forward,
    /// `(u_{j+1} - u_{j-1}) / (2 dx)`
    Central,
}

impl FirstDerivative {
    /// Weights on `(u_{j-1}, u_j, u_{j+1})`.
    #[inline]
    pub(crate) fn weights<T: Scalar>(self, dx: T) -> [T; 3] {
        match self {
            FirstDerivative::Forward => [T::zero(), -dx.recip(), dx.recip()],
            FirstDerivative::Central => {
                let h = (T::lit(2.0) * dx).recip();
                [-h, T::zero(), h]
            }
        }
    }
}

/// Put payoff `K (1 - e^x)_+` at every node.
pub fn payoff_put<T: Scalar>(grid: &SpaceGrid<T>, strike: T) -> Vec<T> {
    (0..grid.m_points)
        .map(|j| strike * (T::one() - grid.node(j).exp()).max(T::zero()))
        .collect()
}

/// Results of applying the three discrete operators to one layer. Boundary
/// entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorApplication<T> {
    pub l: Vec<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
}

/// `L[u]`, `B[u]`, `C[u]` at interior nodes, coefficients at `(t, x_j, v)`,
/// forward first differences.
pub fn apply_operators<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    grid: &SpaceGrid<T>,
    t: T,
    v: T,
    layer: &[T],
) -> Result<OperatorApplication<T>> {
    apply_operators_with(model, grid, t, v, layer, FirstDerivative::Forward)
}

pub fn apply_operators_with<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    grid: &SpaceGrid<T>,
    t: T,
    v: T,
    layer: &[T],
    derivative: FirstDerivative,
) -> Result<OperatorApplication<T>> {
    let m = grid.m_points;
    if layer.len() != m {
        return Err(Error::Dimension(format!(
            "layer has {} entries, grid has {m}",
            layer.len()
        )));
    }
    let mut out = OperatorApplication {
        l: vec![T::zero(); m],
        b: vec![T::zero(); m],
        c: vec![T::zero(); m],
    };
    let [wl, wd, wu] = derivative.weights(grid.dx);
    let dx2 = grid.dx * grid.dx;
    let rho = model.rho(t);
    let beta = model.beta(t, v);
    for j in 1..m - 1 {
        let x = grid.node(j);
        let sigma = model.sigma(t, x, v);
        let (um, u0, up) = (layer[j - 1], layer[j], layer[j + 1]);
        let second = (up - T::lit(2.0) * u0 + um) / dx2;
        let first = wl * um + wd * u0 + wu * up;
        out.l[j] = T::lit(0.5) * sigma * sigma * second + model.mu(t, x, v) * first;
        out.b[j] = rho * sigma * first;
        out.c[j] = rho * beta * model.sigma_y(t, x, v) * first;
    }
    Ok(out)
}

/// Linear interpolation of a layer at `x`; exact at nodes.
pub fn interpolate_at<T: Scalar>(grid: &SpaceGrid<T>, layer: &[T], x: T) -> Result<T> {
    if !(x >= grid.x_min && x <= grid.x_max) {
        return Err(Error::OutOfRange {
            x: x.to_f64_lossy(),
            x_min: grid.x_min.to_f64_lossy(),
            x_max: grid.x_max.to_f64_lossy(),
        });
    }
    if layer.len() != grid.m_points {
        return Err(Error::Dimension(format!(
            "layer has {} entries, grid has {}",
            layer.len(),
            grid.m_points
        )));
    }
    let pos = ((x - grid.x_min) / grid.dx).floor();
    let j = pos.to_usize().unwrap_or(0).min(grid.m_points - 2);
    let (left, right) = (grid.node(j), grid.node(j + 1));
    if x == left {
        return Ok(layer[j]);
    }
    if x == right {
        return Ok(layer[j + 1]);
    }
    let w = (x - left) / grid.dx;
    Ok(layer[j] + w * (layer[j + 1] - layer[j]))
}
