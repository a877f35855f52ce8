use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::systems::HamiltonianSystem;

/// A Hamiltonian vector field `ẋ = J ∇H(x)` of even dimension.
pub trait HamiltonianFlow {
    fn dim(&self) -> usize;

    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64>;

    fn hessian(&mut self, x: &DVector<f64>) -> DMatrix<f64>;

    /// True when the Hessian does not depend on the state.
    fn is_linear(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub ht: f64,
    pub t_final: f64,
    pub newton_tol: f64,
    pub newton_maxit: usize,
}

impl IntegratorOptions {
    pub fn new(ht: f64, t_final: f64) -> Self {
        IntegratorOptions {
            ht,
            t_final,
            newton_tol: 1e-10,
            newton_maxit: 50,
        }
    }

    pub fn steps(&self) -> Result<usize> {
        if !(self.ht > 0.0 && self.t_final > 0.0) {
            return Err(Error::InvalidArgument("time step and final time must be positive".into()));
        }
        let steps = (self.t_final / self.ht).round();
        if (steps * self.ht - self.t_final).abs() > 1e-9 * self.t_final || steps < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "final time {} is not a multiple of the step {}",
                self.t_final, self.ht
            )));
        }
        Ok(steps as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One column per time instant.
    pub states: DMatrix<f64>,
    pub wall_time: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> DVector<f64> {
        self.states.column(i).into_owned()
    }

    /// `count` columns at a uniform stride over the stored instants.
    pub fn snapshots(&self, count: usize) -> Result<DMatrix<f64>> {
        let total = self.len();
        if count == 0 || count > total {
            return Err(Error::InvalidArgument(format!(
                "cannot extract {count} snapshots from {total} instants"
            )));
        }
        let cols: Vec<usize> = (0..count).map(|i| i * total / count).collect();
        Ok(self.states.select_columns(cols.iter()))
    }
}

fn apply_j(g: &DVector<f64>) -> DVector<f64> {
    let n = g.len() / 2;
    DVector::from_fn(2 * n, |i, _| if i < n { g[n + i] } else { -g[i - n] })
}

/// `I − (h/2) J ∇²H(y)`.
fn newton_matrix<F: HamiltonianFlow + ?Sized>(flow: &mut F, y: &DVector<f64>, ht: f64) -> DMatrix<f64> {
    let hess = flow.hessian(y);
    let n = hess.nrows() / 2;
    let mut m = DMatrix::identity(2 * n, 2 * n);
    for c in 0..2 * n {
        for r in 0..n {
            m[(r, c)] -= 0.5 * ht * hess[(n + r, c)];
            m[(n + r, c)] += 0.5 * ht * hess[(r, c)];
        }
    }
    m
}

/// Implicit midpoint-trapezoidal (Crank–Nicolson) integration
/// `x_{m+1} = x_m + (h/2)(J∇H(x_m) + J∇H(x_{m+1}))`, solved by a simplified
/// Newton iteration that reuses its factorization across steps and refreshes
/// it only when convergence slows.
pub fn crank_nicolson<F: HamiltonianFlow + ?Sized>(
    flow: &mut F,
    x0: &DVector<f64>,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let steps = opts.steps()?;
    let dim = flow.dim();
    if x0.len() != dim || dim % 2 != 0 {
        return Err(Error::Shape(format!("initial state has length {}, flow expects {dim}", x0.len())));
    }
    let start = Instant::now();
    let ht = opts.ht;
    let mut states = DMatrix::zeros(dim, steps + 1);
    states.set_column(0, x0);
    let mut x = x0.clone();
    let mut fx = apply_j(&flow.gradient(&x));
    let mut lu = None;
    for step in 0..steps {
        let base = &x + &fx * (0.5 * ht);
        let tol = opts.newton_tol * x.norm().max(1.0);
        let mut y = x.clone();
        let mut fy = fx.clone();
        let mut res_prev = f64::INFINITY;
        let mut fresh = false;
        let mut converged = false;
        let mut last = f64::INFINITY;
        for _ in 0..opts.newton_maxit {
            let r = &y - &base - &fy * (0.5 * ht);
            let res = r.norm();
            last = res;
            if res <= tol {
                converged = true;
                break;
            }
            let slow = res > 0.25 * res_prev;
            if lu.is_none() || (slow && !fresh && !flow.is_linear()) {
                lu = Some(newton_matrix(flow, &y, ht).lu());
                fresh = true;
            } else {
                fresh = false;
            }
            let dy = lu
                .as_ref()
                .unwrap()
                .solve(&(-r))
                .ok_or(Error::NewtonDivergence { step, residual: res })?;
            y += dy;
            fy = apply_j(&flow.gradient(&y));
            res_prev = res;
        }
        if !converged {
            return Err(Error::NewtonDivergence { step, residual: last });
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NewtonDivergence { step, residual: f64::NAN });
        }
        states.set_column(step + 1, &y);
        x = y;
        fx = fy;
    }
    Ok(Trajectory {
        times: (0..=steps).map(|i| i as f64 * ht).collect(),
        states,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Full-order flow of a [`HamiltonianSystem`].
pub struct FullOrderFlow<'a> {
    sys: &'a HamiltonianSystem,
}

impl<'a> FullOrderFlow<'a> {
    pub fn new(sys: &'a HamiltonianSystem) -> Self {
        FullOrderFlow { sys }
    }
}

impl HamiltonianFlow for FullOrderFlow<'_> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }
    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64> {
        self.sys.gradient(x)
    }
    fn hessian(&mut self, x: &DVector<f64>) -> DMatrix<f64> {
        self.sys.hessian(x)
    }
    fn is_linear(&self) -> bool {
        self.sys.is_linear()
    }
}

pub fn simulate_full(sys: &HamiltonianSystem, opts: &IntegratorOptions) -> Result<Trajectory> {
    crank_nicolson(&mut FullOrderFlow::new(sys), sys.initial_state(), opts)
}
