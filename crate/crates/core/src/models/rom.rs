use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::applications::problems::{cotangent_lift, leading_left_singular_vectors};
use crate::applications::{deim_select, AffineReference, DeimReducedRhs, DeimVariant, LocalNonlinearity, PsdProblem};
use crate::applications::deim::DeimWorkspace;
use crate::error::{Error, Result};
use crate::optimizer::{minimize, Problem, SolverOptions, SolverResult};
use crate::symplectic::{symplectic_inverse, SymplecticPoint};

use super::integrator::{crank_nicolson, HamiltonianFlow, IntegratorOptions, Trajectory};
use super::systems::HamiltonianSystem;

/// How the reduced basis is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Reduction {
    CotLift,
    /// Cotangent lift refined by minimizing the projection error.
    Optimized(SolverOptions),
}

impl Reduction {
    /// Solver defaults for basis refinement (initial trial step `1e−8`).
    pub fn default_options() -> SolverOptions {
        SolverOptions {
            gamma0: 1e-8,
            niter: 1000,
            gtol: 1e-10,
            ..SolverOptions::default()
        }
    }
}

/// Origin of the reduced coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Centering {
    /// `x ≈ U x̃`.
    #[default]
    None,
    /// `x ≈ x₀ + U x̃` with snapshots centred at the initial state, so that
    /// the reduced model starts exactly at `x₀`.
    InitialState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NonlinearTreatment {
    Exact,
    PsdDeim,
    StructurePreserving,
}

#[derive(Debug, Clone)]
enum ReducedNonlinearity {
    Exact,
    Deim(DeimReducedRhs),
}

/// Symplectic Galerkin ROM `x̃' = J₂ₖ ∇H̃(x̃)` on the basis `U`.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    u: SymplecticPoint,
    reduced_linear: DMatrix<f64>,
    /// `UᵀM x_ref`; zero without centring.
    linear_shift: DVector<f64>,
    reference: Option<DVector<f64>>,
    nonlinear: ReducedNonlinearity,
    x0: DVector<f64>,
    /// Projection error `‖A − UU⁺A‖_F²` of the basis.
    pub projection_cost: f64,
    /// Present when the basis was refined by optimization.
    pub optimization: Option<SolverResult>,
    pub offline_time: f64,
}

impl ReducedSystem {
    pub fn basis(&self) -> &SymplecticPoint {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.matrix().ncols()
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn deim_indices(&self) -> Option<&[usize]> {
        match &self.nonlinear {
            ReducedNonlinearity::Exact => None,
            ReducedNonlinearity::Deim(op) => Some(op.indices()),
        }
    }

    pub fn reference(&self) -> Option<&DVector<f64>> {
        self.reference.as_ref()
    }

    pub fn reconstruct(&self, xt: &DVector<f64>) -> DVector<f64> {
        let x = self.u.matrix() * xt;
        match &self.reference {
            Some(r) => x + r,
            None => x,
        }
    }

    /// `H̃(x̃)`: `H(x_ref + U x̃)` except for the structure-preserving variant, whose
    /// own reduced energy is returned.
    pub fn reduced_hamiltonian(&self, sys: &HamiltonianSystem, xt: &DVector<f64>) -> f64 {
        match &self.nonlinear {
            ReducedNonlinearity::Deim(op) if op.variant() == DeimVariant::StructurePreserving => {
                op.structured_energy(sys.nonlinearity(), xt)
            }
            _ => sys.hamiltonian(&self.reconstruct(xt)),
        }
    }

    pub fn flow<'a>(&'a self, sys: &'a HamiltonianSystem) -> ReducedFlow<'a> {
        let ws = match &self.nonlinear {
            ReducedNonlinearity::Deim(op) => Some(op.workspace()),
            ReducedNonlinearity::Exact => None,
        };
        ReducedFlow { rom: self, sys, ws }
    }

    pub fn simulate(&self, sys: &HamiltonianSystem, opts: &IntegratorOptions) -> Result<Trajectory> {
        crank_nicolson(&mut self.flow(sys), &self.x0, opts)
    }
}

pub struct ReducedFlow<'a> {
    rom: &'a ReducedSystem,
    sys: &'a HamiltonianSystem,
    ws: Option<DeimWorkspace>,
}

impl HamiltonianFlow for ReducedFlow<'_> {
    fn dim(&self) -> usize {
        self.rom.dim()
    }

    fn gradient(&mut self, xt: &DVector<f64>) -> DVector<f64> {
        match &self.rom.nonlinear {
            ReducedNonlinearity::Exact => {
                let u = self.rom.u.matrix();
                let mut g = &self.rom.reduced_linear * xt + &self.rom.linear_shift;
                if !self.sys.is_linear() {
                    g += u.tr_mul(&self.sys.nonlinear_gradient(&self.rom.reconstruct(xt)));
                }
                g
            }
            ReducedNonlinearity::Deim(op) => op.gradient(self.sys.nonlinearity(), xt, self.ws.as_mut().unwrap()),
        }
    }

    fn hessian(&mut self, xt: &DVector<f64>) -> DMatrix<f64> {
        match &self.rom.nonlinear {
            ReducedNonlinearity::Exact => {
                let mut h = self.rom.reduced_linear.clone();
                if self.sys.is_linear() {
                    return h;
                }
                let u = self.rom.u.matrix();
                let x = self.rom.reconstruct(xt);
                let nl = self.sys.nonlinearity();
                let mut hu = DMatrix::zeros(u.nrows(), u.ncols());
                let mut row = Vec::new();
                for i in 0..u.nrows() {
                    row.clear();
                    nl.hessian_row(i, x.as_slice(), &mut row);
                    for &(j, v) in &row {
                        for c in 0..u.ncols() {
                            hu[(i, c)] += v * u[(j, c)];
                        }
                    }
                }
                h.gemm_tr(1.0, u, &hu, 1.0);
                h
            }
            ReducedNonlinearity::Deim(op) => op.jacobian(self.sys.nonlinearity(), xt, self.ws.as_mut().unwrap()),
        }
    }

    fn is_linear(&self) -> bool {
        self.sys.is_linear()
    }
}

/// Number of DEIM modes: `round(2.5 k)`, limited by the numerical rank of the
/// nonlinear snapshots.
pub fn deim_mode_count(k: usize, singular_values: &DVector<f64>) -> usize {
    let target = (2.5 * k as f64).round() as usize;
    let smax = singular_values.max();
    let rank = singular_values.iter().filter(|&&s| s > 1e-12 * smax).count();
    target.min(rank).max(1)
}

/// A symplectic reduced basis with its projection error.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    pub u: SymplecticPoint,
    /// Projection error `‖A − UU⁺A‖_F²` of the basis.
    pub projection_cost: f64,
    /// Present when the basis was refined by optimization.
    pub optimization: Option<SolverResult>,
    /// Centre subtracted from the snapshots.
    pub reference: Option<DVector<f64>>,
    pub time: f64,
}

/// Computes a `2n × 2k` basis from state snapshots (columns of `snapshots`),
/// centred at `reference` when given.
pub fn compute_basis(
    snapshots: &DMatrix<f64>,
    k: usize,
    reduction: &Reduction,
    reference: Option<&DVector<f64>>,
) -> Result<ReducedBasis> {
    if snapshots.nrows() % 2 != 0 {
        return Err(Error::Shape(format!("snapshots have an odd number of rows ({})", snapshots.nrows())));
    }
    if k == 0 || 2 * snapshots.ncols() < k || k > snapshots.nrows() / 2 {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in [1, min(n, 2s)] for {} snapshots of dimension {}",
            snapshots.ncols(),
            snapshots.nrows()
        )));
    }
    let start = Instant::now();
    let data = match reference {
        Some(r) if r.len() != snapshots.nrows() => {
            return Err(Error::Shape(format!("reference has length {}", r.len())));
        }
        Some(r) => {
            let mut centred = snapshots.clone();
            for mut c in centred.column_iter_mut() {
                c -= r;
            }
            centred
        }
        None => snapshots.clone(),
    };
    let lift = cotangent_lift(&data, k)?;
    let problem = PsdProblem::new(data, k)?;
    let (u, optimization) = match reduction {
        Reduction::CotLift => (lift, None),
        Reduction::Optimized(options) => {
            let result = minimize(&problem, lift, options)?;
            (result.x.clone(), Some(result))
        }
    };
    Ok(ReducedBasis {
        projection_cost: problem.cost(u.matrix()),
        u,
        optimization,
        reference: reference.cloned(),
        time: start.elapsed().as_secs_f64(),
    })
}

impl ReducedSystem {
    /// Galerkin projection of `sys` onto `basis`; DEIM data are built from
    /// the nonlinear gradients at the snapshot states.
    pub fn assemble(
        sys: &HamiltonianSystem,
        snapshots: &DMatrix<f64>,
        basis: &ReducedBasis,
        treatment: NonlinearTreatment,
    ) -> Result<ReducedSystem> {
        let um = basis.u.matrix();
        if snapshots.nrows() != sys.dim() || um.nrows() != sys.dim() {
            return Err(Error::Shape(format!(
                "snapshots have {} rows and the basis {}, system dimension is {}",
                snapshots.nrows(),
                um.nrows(),
                sys.dim()
            )));
        }
        let start = Instant::now();
        let k = um.ncols() / 2;
        let reduced_linear = {
            let mu = sys.linear().mul_dense(um);
            let r = um.tr_mul(&mu);
            (&r + r.transpose()) * 0.5
        };
        let reference = match &basis.reference {
            Some(r) => Some(AffineReference {
                linear_image: sys.linear().mul_vec(r),
                state: r.clone(),
            }),
            None => None,
        };
        let linear_shift = reference
            .as_ref()
            .map_or_else(|| DVector::zeros(um.ncols()), |r| um.tr_mul(&r.linear_image));
        let x0 = match &basis.reference {
            Some(r) => symplectic_inverse(um) * (sys.initial_state() - r),
            None => symplectic_inverse(um) * sys.initial_state(),
        };
        let nonlinear = match treatment {
            NonlinearTreatment::Exact => ReducedNonlinearity::Exact,
            _ if sys.is_linear() => ReducedNonlinearity::Exact,
            NonlinearTreatment::PsdDeim | NonlinearTreatment::StructurePreserving => {
                let nl_snaps = sys.nonlinear_snapshots(snapshots);
                let sv = nl_snaps.clone().singular_values();
                let m = deim_mode_count(k, &sv);
                let v = leading_left_singular_vectors(nl_snaps, m)?;
                let indices = deim_select(&v)?;
                let variant = if treatment == NonlinearTreatment::PsdDeim {
                    DeimVariant::PsdDeim
                } else {
                    DeimVariant::StructurePreserving
                };
                ReducedNonlinearity::Deim(DeimReducedRhs::with_reference(
                    um,
                    reduced_linear.clone(),
                    &v,
                    &indices,
                    variant,
                    sys.nonlinearity(),
                    reference.as_ref(),
                )?)
            }
        };
        Ok(ReducedSystem {
            u: basis.u.clone(),
            reduced_linear,
            linear_shift,
            reference: basis.reference.clone(),
            nonlinear,
            x0,
            projection_cost: basis.projection_cost,
            optimization: basis.optimization.clone(),
            offline_time: basis.time + start.elapsed().as_secs_f64(),
        })
    }
}

/// Builds a ROM from state snapshots (columns of `snapshots`).
pub fn build_rom(
    sys: &HamiltonianSystem,
    snapshots: &DMatrix<f64>,
    k: usize,
    reduction: &Reduction,
    treatment: NonlinearTreatment,
    centering: Centering,
) -> Result<ReducedSystem> {
    if snapshots.nrows() != sys.dim() {
        return Err(Error::Shape(format!(
            "snapshots have {} rows, system dimension is {}",
            snapshots.nrows(),
            sys.dim()
        )));
    }
    let reference = match centering {
        Centering::None => None,
        Centering::InitialState => Some(sys.initial_state()),
    };
    let basis = compute_basis(snapshots, k, reduction, reference)?;
    ReducedSystem::assemble(sys, snapshots, &basis, treatment)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub re_x: f64,
    pub re_h: f64,
    /// `‖x(t) − U x̃(t)‖ / mean_t ‖x‖`.
    pub state_series: Vec<f64>,
    /// `|H(x(t)) − H̃(x̃(t))| / |H(x(0))|`.
    pub energy_series: Vec<f64>,
    /// `H(x(t)) − H̃(x̃(t))`.
    pub energy_gap: Vec<f64>,
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Relative `L²(0, T)` errors in state and energy (composite trapezoid rule)
/// and the pointwise error series.
pub fn relative_errors(
    sys: &HamiltonianSystem,
    full: &Trajectory,
    rom: &ReducedSystem,
    rom_traj: &Trajectory,
) -> Result<ErrorReport> {
    if full.times.len() != rom_traj.times.len()
        || full.times.iter().zip(&rom_traj.times).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
    {
        return Err(Error::GridMismatch(format!(
            "full trajectory has {} instants, reduced has {}",
            full.times.len(),
            rom_traj.times.len()
        )));
    }
    let count = full.times.len();
    let mut err2 = Vec::with_capacity(count);
    let mut norm2 = Vec::with_capacity(count);
    let mut norms = Vec::with_capacity(count);
    let mut errs = Vec::with_capacity(count);
    let mut h_full = Vec::with_capacity(count);
    let mut gap = Vec::with_capacity(count);
    for i in 0..count {
        let x = full.state(i);
        let xt = rom_traj.state(i);
        let e = (&x - rom.reconstruct(&xt)).norm();
        let nx = x.norm();
        err2.push(e * e);
        norm2.push(nx * nx);
        errs.push(e);
        norms.push(nx);
        let h = sys.hamiltonian(&x);
        h_full.push(h);
        gap.push(h - rom.reduced_hamiltonian(sys, &xt));
    }
    let t = &full.times;
    let re_x = (trapezoid(t, &err2) / trapezoid(t, &norm2)).sqrt();
    let gap2: Vec<f64> = gap.iter().map(|g| g * g).collect();
    let h2: Vec<f64> = h_full.iter().map(|h| h * h).collect();
    let re_h = (trapezoid(t, &gap2) / trapezoid(t, &h2)).sqrt();
    let span = t[count - 1] - t[0];
    let mean_norm = if span > 0.0 { trapezoid(t, &norms) / span } else { norms[0] };
    let h0 = h_full[0].abs();
    Ok(ErrorReport {
        re_x,
        re_h,
        state_series: errs.iter().map(|e| e / mean_norm).collect(),
        energy_series: gap.iter().map(|g| g.abs() / h0).collect(),
        energy_gap: gap,
    })
}
