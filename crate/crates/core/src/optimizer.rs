//! Riemannian gradient descent with alternating Barzilai–Borwein trial steps
//! and non-monotone backtracking.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{riemannian_gradient, Metric};
use crate::retraction::{retract_with_safeguard, RetractionKind};
use crate::symplectic::{symplecticity_residual, Dims, SymplecticPoint, TangentVector};

/// A smooth cost on `R^{2n×2k}` restricted to `Sp(2k, 2n)`.
pub trait Problem: Sync {
    fn dims(&self) -> Dims;

    fn cost(&self, x: &DMatrix<f64>) -> f64;

    fn euclidean_gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub metric: Metric,
    pub retraction: RetractionKind,
    pub gtol: f64,
    pub niter: usize,
    pub beta: f64,
    pub delta: f64,
    pub gamma0: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub alpha: f64,
    pub max_backtracks: usize,
    /// Rescale SR steps to spectral norm below one.
    pub sr_safeguard: bool,
    /// Record wall-clock time; when off every `time_s` is zero.
    pub record_time: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            metric: Metric::default(),
            retraction: RetractionKind::CayleyEconomical,
            gtol: 1e-6,
            niter: 1000,
            beta: 1e-4,
            delta: 0.1,
            gamma0: 1e-3,
            gamma_min: 1e-15,
            gamma_max: 1e5,
            alpha: 0.85,
            max_backtracks: 30,
            sr_safeguard: false,
            record_time: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if let Metric::CanonicalLike { rho } = self.metric {
            if !(rho > 0.0) {
                return bad("rho must be positive");
            }
        }
        if !(self.gtol > 0.0) {
            return bad("gtol must be positive");
        }
        if self.niter == 0 {
            return bad("niter must be positive");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.gamma0 > 0.0 && self.gamma_min > 0.0 && self.gamma_min < self.gamma_max) {
            return bad("step bounds must satisfy 0 < gamma_min < gamma_max and gamma0 > 0");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.max_backtracks == 0 {
            return bad("max_backtracks must be positive");
        }
        Ok(())
    }
}

/// One row per iterate. `tau` and `backtracks` describe the step taken from
/// this iterate (zero on the final row); `reference` is the non-monotone
/// reference value `c_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub cost: f64,
    pub grad_norm: f64,
    pub feasibility: f64,
    pub tau: f64,
    pub backtracks: usize,
    pub time_s: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
}

impl SolverTrace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    GradToleranceReached,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub x: SymplecticPoint,
    pub trace: SolverTrace,
    pub status: SolverStatus,
}

impl SolverResult {
    pub fn cost(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.cost)
    }
}

/// Alternating Barzilai–Borwein step from `W = X_i − X_{i−1}` and
/// `Y = Z_i − Z_{i−1}`, clamped to `[γ_min, γ_max]`.
pub fn bb_trial_step(i: usize, w: &DMatrix<f64>, y: &DMatrix<f64>, gamma_min: f64, gamma_max: f64) -> f64 {
    let wy = w.dot(y).abs();
    let raw = if i % 2 == 1 {
        w.norm_squared() / wy
    } else {
        wy / y.norm_squared()
    };
    if wy == 0.0 || y.norm_squared() == 0.0 || !raw.is_finite() {
        return gamma_min;
    }
    raw.clamp(gamma_min, gamma_max)
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub tau: f64,
    pub x: SymplecticPoint,
    pub cost: f64,
    pub backtracks: usize,
}

/// Finds the smallest `ℓ` with `f(R(τZ)) ≤ c + β τ g`, `τ = γ δ^ℓ`, where
/// `g` is the (negative) directional derivative along `Z`. Retraction
/// failures and non-finite costs count as rejections.
#[allow(clippy::too_many_arguments)]
pub fn nonmonotone_search<P: Problem + ?Sized>(
    problem: &P,
    retraction: RetractionKind,
    x: &SymplecticPoint,
    z: &TangentVector,
    gamma: f64,
    reference: f64,
    slope: f64,
    beta: f64,
    delta: f64,
    max_backtracks: usize,
    sr_safeguard: bool,
) -> Result<SearchOutcome> {
    let mut tau = gamma;
    for ell in 0..=max_backtracks {
        if let Ok(candidate) = retract_with_safeguard(retraction, x, &z.scaled(tau), sr_safeguard) {
            let cost = problem.cost(candidate.matrix());
            if cost.is_finite() && cost <= reference + beta * tau * slope {
                return Ok(SearchOutcome {
                    tau,
                    x: candidate,
                    cost,
                    backtracks: ell,
                });
            }
        }
        tau *= delta;
    }
    Err(Error::LineSearchFailed {
        backtracks: max_backtracks,
    })
}

/// Runs the method from `x0` until `‖grad f‖_F ≤ gtol`, `niter` steps, or a
/// failed line search.
pub fn minimize<P: Problem + ?Sized>(problem: &P, x0: SymplecticPoint, options: &SolverOptions) -> Result<SolverResult> {
    options.validate()?;
    let dims = problem.dims();
    if x0.dims() != dims {
        return Err(Error::Shape(format!(
            "initial point is {:?}, problem expects {:?}",
            x0.dims(),
            dims
        )));
    }
    let start = Instant::now();
    let elapsed = || {
        if options.record_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };

    let mut x = x0;
    let mut cost = problem.cost(x.matrix());
    if !cost.is_finite() {
        return Err(Error::InvalidArgument("cost is not finite at the initial point".into()));
    }
    let mut egrad = problem.euclidean_gradient(x.matrix());
    let mut grad = riemannian_gradient(options.metric, &x, &egrad)?;
    let mut q = 1.0;
    let mut reference = cost;
    let mut gamma = options.gamma0;
    let mut previous: Option<(DMatrix<f64>, DMatrix<f64>)> = None;
    let mut trace = SolverTrace::default();

    let mut i = 0;
    let status = loop {
        let grad_norm = grad.entries().norm();
        let mut record = IterationRecord {
            iter: i,
            cost,
            grad_norm,
            feasibility: symplecticity_residual(x.matrix()),
            tau: 0.0,
            backtracks: 0,
            time_s: 0.0,
            reference,
        };
        if grad_norm <= options.gtol {
            record.time_s = elapsed();
            trace.records.push(record);
            break SolverStatus::GradToleranceReached;
        }
        if i == options.niter {
            record.time_s = elapsed();
            trace.records.push(record);
            break SolverStatus::MaxIterations;
        }

        let z = grad.scaled(-1.0);
        if let Some((x_prev, z_prev)) = &previous {
            gamma = bb_trial_step(
                i,
                &(x.matrix() - x_prev),
                &(z.entries() - z_prev),
                options.gamma_min,
                options.gamma_max,
            );
        }
        // g(grad f, Z) = −g(grad f, grad f) = −tr(egradᵀ grad).
        let slope = -egrad.dot(grad.entries());
        let outcome = nonmonotone_search(
            problem,
            options.retraction,
            &x,
            &z,
            gamma,
            reference,
            slope,
            options.beta,
            options.delta,
            options.max_backtracks,
            options.sr_safeguard,
        );
        let outcome = match outcome {
            Ok(o) => o,
            Err(_) => {
                record.backtracks = options.max_backtracks;
                record.time_s = elapsed();
                trace.records.push(record);
                break SolverStatus::LineSearchFailed;
            }
        };
        record.tau = outcome.tau;
        record.backtracks = outcome.backtracks;
        record.time_s = elapsed();
        trace.records.push(record);

        let q_next = options.alpha * q + 1.0;
        reference = (options.alpha * q * reference + outcome.cost) / q_next;
        q = q_next;

        previous = Some((x.into_matrix(), z.into_entries()));
        x = outcome.x;
        cost = outcome.cost;
        egrad = problem.euclidean_gradient(x.matrix());
        grad = riemannian_gradient(options.metric, &x, &egrad)?;
        i += 1;
    };
    log::debug!(
        "minimize: {:?} after {} iterations, f = {:.6e}",
        status,
        trace.iterations(),
        cost
    );
    Ok(SolverResult { x, trace, status })
}
