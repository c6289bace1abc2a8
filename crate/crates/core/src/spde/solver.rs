use super::{Boundaries, BoundaryRule, FirstDerivative, Scheme, SpaceGrid};
use crate::brownian::{PathBundle, TimeGrid};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::scalar::Scalar;

/// Data for one backward step from `t_next = t_{i+1}` to `t_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInputs<T> {
    pub t_i: T,
    pub t_next: T,
    pub v_i: T,
    pub v_next: T,
    /// `B_{t_{i+1}} - B_{t_i}`.
    pub db: T,
    pub dt: T,
}

/// Per-node stencil weights at one time point, interior nodes only.
///
/// `a_*` are the weights of `L - C`, `b_*` those of `B`, on
/// `(u_{j-1}, u_j, u_{j+1})`.
#[derive(Debug, Clone, Default)]
struct Stencils<T> {
    a_lo: Vec<T>,
    a_di: Vec<T>,
    a_up: Vec<T>,
    b_lo: Vec<T>,
    b_di: Vec<T>,
    b_up: Vec<T>,
}

impl<T: Scalar> Stencils<T> {
    fn new(n: usize) -> Self {
        let z = || vec![T::zero(); n];
        Self {
            a_lo: z(),
            a_di: z(),
            a_up: z(),
            b_lo: z(),
            b_di: z(),
            b_up: z(),
        }
    }

    fn fill<M: ModelSpec<T>>(
        &mut self,
        model: &M,
        grid: &SpaceGrid<T>,
        derivative: FirstDerivative,
        t: T,
        v: T,
    ) {
        let [wl, wd, wu] = derivative.weights(grid.dx);
        let half_inv_dx2 = T::lit(0.5) / (grid.dx * grid.dx);
        let two = T::lit(2.0);
        let rho = model.rho(t);
        let rho_beta = rho * model.beta(t, v);
        if model.is_space_homogeneous() {
            let x = grid.x_min;
            let sigma = model.sigma(t, x, v);
            let diffusion = half_inv_dx2 * sigma * sigma;
            let drift = model.mu(t, x, v) - rho_beta * model.sigma_y(t, x, v);
            let rs = rho * sigma;
            self.a_lo.fill(diffusion + drift * wl);
            self.a_di.fill(drift * wd - two * diffusion);
            self.a_up.fill(diffusion + drift * wu);
            self.b_lo.fill(rs * wl);
            self.b_di.fill(rs * wd);
            self.b_up.fill(rs * wu);
            return;
        }
        for k in 0..self.a_di.len() {
            let x = grid.node(k + 1);
            let sigma = model.sigma(t, x, v);
            let diffusion = half_inv_dx2 * sigma * sigma;
            let drift = model.mu(t, x, v) - rho_beta * model.sigma_y(t, x, v);
            self.a_lo[k] = diffusion + drift * wl;
            self.a_di[k] = drift * wd - two * diffusion;
            self.a_up[k] = diffusion + drift * wu;
            let rs = rho * sigma;
            self.b_lo[k] = rs * wl;
            self.b_di[k] = rs * wd;
            self.b_up[k] = rs * wu;
        }
    }
}

/// Backward sweep for one path. Owns its scratch space; create one per worker.
#[derive(Debug, Clone)]
pub struct SpdeSolver<T> {
    grid: SpaceGrid<T>,
    boundaries: Boundaries<T>,
    /// Strike for [`BoundaryRule::Forward`]; `None` keeps `boundaries` fixed.
    forward_strike: Option<T>,
    derivative: FirstDerivative,
    now: Stencils<T>,
    next: Stencils<T>,
    rhs: Vec<T>,
    scratch: Vec<T>,
}

impl<T: Scalar> SpdeSolver<T> {
    pub fn new(grid: SpaceGrid<T>, boundaries: Boundaries<T>) -> Self {
        let n = grid.m_points - 2;
        Self {
            grid,
            boundaries,
            forward_strike: None,
            derivative: FirstDerivative::Forward,
            now: Stencils::new(n),
            next: Stencils::new(n),
            rhs: vec![T::zero(); n],
            scratch: vec![T::zero(); n],
        }
    }

    /// Solver for a put struck at `strike`, with end values set by `rule`.
    pub fn for_put(grid: SpaceGrid<T>, strike: T, rule: BoundaryRule) -> Self {
        let mut solver = Self::new(grid, Boundaries::put(strike));
        if rule == BoundaryRule::Forward {
            solver.boundaries.left = forward_left_value(strike, grid.x_min, T::zero());
            solver.forward_strike = Some(strike);
        }
        solver
    }

    pub fn with_derivative(mut self, derivative: FirstDerivative) -> Self {
        self.derivative = derivative;
        self
    }

    pub fn grid(&self) -> &SpaceGrid<T> {
        &self.grid
    }

    pub fn boundaries(&self) -> Boundaries<T> {
        self.boundaries
    }

    /// One backward step, evaluating coefficients at both time points.
    pub fn step<M: ModelSpec<T>>(
        &mut self,
        scheme: Scheme,
        model: &M,
        layer_next: &[T],
        out: &mut [T],
        inp: StepInputs<T>,
    ) -> Result<()> {
        self.check_layers(layer_next, out)?;
        let (grid, d) = (self.grid, self.derivative);
        self.now.fill(model, &grid, d, inp.t_i, inp.v_i);
        self.next.fill(model, &grid, d, inp.t_next, inp.v_next);
        let boundaries = self.boundaries;
        self.step_prepared(scheme, layer_next, out, boundaries, inp.db, inp.dt)
    }

    fn check_layers(&self, layer_next: &[T], out: &[T]) -> Result<()> {
        let m = self.grid.m_points;
        if layer_next.len() != m || out.len() != m {
            return Err(Error::Dimension(format!(
                "layers of length {} and {}, grid has {m} points",
                layer_next.len(),
                out.len()
            )));
        }
        Ok(())
    }

    /// Step using the stencils already held in `self.now` (time `t_i`) and
    /// `self.next` (time `t_{i+1}`). The right-hand side and the implicit
    /// matrix are assembled inside the forward Thomas sweep.
    fn step_prepared(
        &mut self,
        scheme: Scheme,
        u: &[T],
        out: &mut [T],
        boundaries: Boundaries<T>,
        db: T,
        dt: T,
    ) -> Result<()> {
        let theta: T = scheme.implicit_weight();
        let implicit = theta * dt;
        let explicit = (T::one() - theta) * dt;
        let crank_nicolson = scheme == Scheme::CrankNicolson;
        let n = self.rhs.len();
        let (now, next) = (&self.now, &self.next);
        let Boundaries { left, right } = boundaries;
        let (c_prime, d_prime) = (&mut self.scratch, &mut self.rhs);

        let mut prev_c = T::zero();
        let mut prev_d = T::zero();
        for k in 0..n {
            let (um, u0, up) = (u[k], u[k + 1], u[k + 2]);
            let mut r = u0 + db * (next.b_lo[k] * um + next.b_di[k] * u0 + next.b_up[k] * up);
            if crank_nicolson {
                r = r + explicit * (next.a_lo[k] * um + next.a_di[k] * u0 + next.a_up[k] * up);
            }
            let lower = -implicit * now.a_lo[k];
            let upper = -implicit * now.a_up[k];
            let diag = T::one() - implicit * now.a_di[k];
            if k == 0 {
                r = r - lower * left;
            }
            if k + 1 == n {
                r = r - upper * right;
            }
            let pivot = diag - lower * prev_c;
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(Error::SingularSystem { row: k });
            }
            let inv = pivot.recip();
            prev_c = upper * inv;
            prev_d = (r - lower * prev_d) * inv;
            c_prime[k] = prev_c;
            d_prime[k] = prev_d;
        }
        out[0] = left;
        out[n + 1] = right;
        let mut x = d_prime[n - 1];
        out[n] = x;
        for k in (0..n - 1).rev() {
            x = d_prime[k] - c_prime[k] * x;
            out[k + 1] = x;
        }
        Ok(())
    }

    /// Runs `n_steps` backward steps from `payoff` along the volatility path
    /// `v` and increments `db`, leaving the `t = 0` layer in `layer`.
    ///
    /// Coefficients at `t_{i+1}` computed for step `i + 1` are reused by step `i`.
    #[allow(clippy::too_many_arguments)]
    pub fn solve_backward_into<M: ModelSpec<T>>(
        &mut self,
        scheme: Scheme,
        model: &M,
        time_grid: &TimeGrid<T>,
        v: &[T],
        db: &[T],
        payoff: &[T],
        layer: &mut [T],
        tmp: &mut [T],
    ) -> Result<()> {
        let n = time_grid.n_steps;
        if db.len() != n || v.len() != n + 1 {
            return Err(Error::Dimension(format!(
                "path with {} increments and {} vol values for {n} steps",
                db.len(),
                v.len()
            )));
        }
        self.check_layers(payoff, layer)?;
        self.check_layers(payoff, tmp)?;
        let (grid, d) = (self.grid, self.derivative);
        self.next.fill(model, &grid, d, time_grid.time(n), v[n]);
        // alternate between the two buffers so the final layer lands in `layer`
        let (mut src, mut dst) = if n.is_multiple_of(2) {
            (layer, tmp)
        } else {
            (tmp, layer)
        };
        src.copy_from_slice(payoff);
        let mut boundaries = self.boundaries;
        let mut rate_to_maturity = T::zero();
        for i in (0..n).rev() {
            let t_i = time_grid.time(i);
            if let Some(strike) = self.forward_strike {
                rate_to_maturity = rate_to_maturity + model.rate(t_i) * time_grid.dt;
                boundaries.left = forward_left_value(strike, grid.x_min, rate_to_maturity);
            }
            self.now.fill(model, &grid, d, t_i, v[i]);
            self.step_prepared(scheme, src, dst, boundaries, db[i], time_grid.dt)
                .map_err(|e| Error::Step {
                    step: i,
                    source: Box::new(e),
                })?;
            std::mem::swap(&mut src, &mut dst);
            std::mem::swap(&mut self.now, &mut self.next);
        }
        Ok(())
    }

    pub fn solve_backward<M: ModelSpec<T>>(
        &mut self,
        scheme: Scheme,
        model: &M,
        time_grid: &TimeGrid<T>,
        path: &PathBundle<T>,
        payoff: &[T],
    ) -> Result<Vec<T>> {
        let m = self.grid.m_points;
        let mut layer = vec![T::zero(); m];
        let mut tmp = vec![T::zero(); m];
        self.solve_backward_into(
            scheme, model, time_grid, &path.v, &path.db, payoff, &mut layer, &mut tmp,
        )?;
        Ok(layer)
    }
}

/// `K (1 - e^{x_min + R})` floored at zero, `R` the rate integral to maturity.
pub fn forward_left_value<T: Scalar>(strike: T, x_min: T, rate_to_maturity: T) -> T {
    (strike * (T::one() - (x_min + rate_to_maturity).exp())).max(T::zero())
}

fn single_step<T: Scalar, M: ModelSpec<T>>(
    scheme: Scheme,
    model: &M,
    grid: &SpaceGrid<T>,
    boundaries: Boundaries<T>,
    layer_next: &[T],
    inp: StepInputs<T>,
) -> Result<Vec<T>> {
    let mut solver = SpdeSolver::new(*grid, boundaries);
    let mut out = vec![T::zero(); grid.m_points];
    solver.step(scheme, model, layer_next, &mut out, inp)?;
    Ok(out)
}

/// `(I - dt (L_i - C_i)) u^i = u^{i+1} + B_{i+1}[u^{i+1}] dB_i`.
pub fn step_semi_implicit<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    grid: &SpaceGrid<T>,
    boundaries: Boundaries<T>,
    layer_next: &[T],
    inp: StepInputs<T>,
) -> Result<Vec<T>> {
    single_step(
        Scheme::SemiImplicit,
        model,
        grid,
        boundaries,
        layer_next,
        inp,
    )
}

/// `(I - dt/2 (L_i - C_i)) u^i = (I + dt/2 (L_{i+1} - C_{i+1})) u^{i+1} + B_{i+1}[u^{i+1}] dB_i`.
pub fn step_crank_nicolson<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    grid: &SpaceGrid<T>,
    boundaries: Boundaries<T>,
    layer_next: &[T],
    inp: StepInputs<T>,
) -> Result<Vec<T>> {
    single_step(
        Scheme::CrankNicolson,
        model,
        grid,
        boundaries,
        layer_next,
        inp,
    )
}

/// Backward solve of one path from the terminal `payoff` to `t = 0`.
pub fn solve_backward<T: Scalar, M: ModelSpec<T>>(
    model: &M,
    grid: &SpaceGrid<T>,
    boundaries: Boundaries<T>,
    time_grid: &TimeGrid<T>,
    path: &PathBundle<T>,
    payoff: &[T],
    scheme: Scheme,
) -> Result<Vec<T>> {
    SpdeSolver::new(*grid, boundaries).solve_backward(scheme, model, time_grid, path, payoff)
}
