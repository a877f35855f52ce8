use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::applications::LocalNonlinearity;
use crate::error::{Error, Result};
use crate::symplectic::j_mul;

use super::sparse::Csr;
use super::vlasov_ic::{sample_vlasov_ic, VlasovIcParams};

/// Nonlinear energy terms of the four models.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    None { n: usize },
    /// `Σ (1 − cos q_i)` plus the affine Dirichlet boundary terms.
    SineGordon { n: usize, phi_a: f64, phi_b: f64, inv_h2: f64 },
    /// `−ε/4 Σ (q_i² + p_i²)²`.
    Schrodinger { n: usize, eps: f64 },
    /// `−Σ φ(q_i)` with `φ(ξ) = −(A/κ) sin(κξ)`, so `−φ′ = A cos(κξ)`.
    Vlasov { n: usize, amplitude: f64, wavenumber: f64 },
}

impl Nonlinearity {
    fn n(&self) -> usize {
        match *self {
            Nonlinearity::None { n }
            | Nonlinearity::SineGordon { n, .. }
            | Nonlinearity::Schrodinger { n, .. }
            | Nonlinearity::Vlasov { n, .. } => n,
        }
    }
}

impl LocalNonlinearity for Nonlinearity {
    fn dim(&self) -> usize {
        2 * self.n()
    }

    fn support(&self, i: usize) -> Vec<usize> {
        match *self {
            Nonlinearity::Schrodinger { n, .. } => {
                let j = i % n;
                vec![j, n + j]
            }
            _ => vec![i],
        }
    }

    fn energy(&self, x: &[f64]) -> f64 {
        match *self {
            Nonlinearity::None { .. } => 0.0,
            Nonlinearity::SineGordon {
                n,
                phi_a,
                phi_b,
                inv_h2,
            } => {
                let bulk: f64 = x[..n].iter().map(|q| 1.0 - q.cos()).sum();
                bulk + inv_h2 * (0.5 * phi_a * phi_a - phi_a * x[0] + 0.5 * phi_b * phi_b - phi_b * x[n - 1])
            }
            Nonlinearity::Schrodinger { n, eps } => {
                -0.25 * eps * (0..n).map(|i| (x[i] * x[i] + x[n + i] * x[n + i]).powi(2)).sum::<f64>()
            }
            Nonlinearity::Vlasov {
                n,
                amplitude,
                wavenumber,
            } => x[..n].iter().map(|q| amplitude / wavenumber * (wavenumber * q).sin()).sum(),
        }
    }

    fn component(&self, i: usize, x: &[f64]) -> f64 {
        match *self {
            Nonlinearity::None { .. } => 0.0,
            Nonlinearity::SineGordon {
                n,
                phi_a,
                phi_b,
                inv_h2,
            } => {
                if i >= n {
                    return 0.0;
                }
                let mut g = x[i].sin();
                if i == 0 {
                    g -= phi_a * inv_h2;
                }
                if i == n - 1 {
                    g -= phi_b * inv_h2;
                }
                g
            }
            Nonlinearity::Schrodinger { n, eps } => {
                let j = i % n;
                let (q, p) = (x[j], x[n + j]);
                -eps * (q * q + p * p) * x[i]
            }
            Nonlinearity::Vlasov {
                n,
                amplitude,
                wavenumber,
            } => {
                if i >= n {
                    0.0
                } else {
                    amplitude * (wavenumber * x[i]).cos()
                }
            }
        }
    }

    fn hessian_row(&self, i: usize, x: &[f64], out: &mut Vec<(usize, f64)>) {
        match *self {
            Nonlinearity::None { .. } => {}
            Nonlinearity::SineGordon { n, .. } => {
                if i < n {
                    out.push((i, x[i].cos()));
                }
            }
            Nonlinearity::Schrodinger { n, eps } => {
                let j = i % n;
                let (q, p) = (x[j], x[n + j]);
                let cross = -2.0 * eps * q * p;
                if i < n {
                    out.push((j, -eps * (3.0 * q * q + p * p)));
                    out.push((n + j, cross));
                } else {
                    out.push((j, cross));
                    out.push((n + j, -eps * (q * q + 3.0 * p * p)));
                }
            }
            Nonlinearity::Vlasov {
                n,
                amplitude,
                wavenumber,
            } => {
                if i < n {
                    out.push((i, -amplitude * wavenumber * (wavenumber * x[i]).sin()));
                }
            }
        }
    }

    fn is_affine(&self) -> bool {
        matches!(self, Nonlinearity::None { .. })
    }
}

/// `ẋ = J ∇H(x)` with `H(x) = ½ xᵀMx + h(x)`.
#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    pub name: String,
    n: usize,
    linear: Csr,
    nonlinearity: Nonlinearity,
    x0: DVector<f64>,
    /// Spatial grid (or particle indices) for output.
    pub grid: Vec<f64>,
}

impl HamiltonianSystem {
    pub fn new(name: &str, linear: Csr, nonlinearity: Nonlinearity, x0: DVector<f64>, grid: Vec<f64>) -> Result<Self> {
        let dim = x0.len();
        if dim % 2 != 0 || linear.nrows() != dim || linear.ncols() != dim || nonlinearity.dim() != dim {
            return Err(Error::Shape(format!("inconsistent system dimensions for {name}")));
        }
        Ok(HamiltonianSystem {
            name: name.to_string(),
            n: dim / 2,
            linear,
            nonlinearity,
            x0,
            grid,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn linear(&self) -> &Csr {
        &self.linear
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn is_linear(&self) -> bool {
        self.nonlinearity.is_affine()
    }

    pub fn hamiltonian(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&self.linear.mul_vec(x)) + self.nonlinearity.energy(x.as_slice())
    }

    pub fn nonlinear_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        self.nonlinearity.gradient(x.as_slice(), g.as_mut_slice());
        g
    }

    /// `∇H(x) = Mx + ∇h(x)`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.linear.mul_vec(x) + self.nonlinear_gradient(x)
    }

    pub fn rhs(&self, x: &DVector<f64>) -> DVector<f64> {
        let g = self.gradient(x);
        let n = self.n;
        DVector::from_fn(2 * n, |i, _| if i < n { g[n + i] } else { -g[i - n] })
    }

    /// Dense Hessian `M + ∇²h(x)`.
    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = self.linear.to_dense();
        let mut row = Vec::new();
        for i in 0..self.dim() {
            row.clear();
            self.nonlinearity.hessian_row(i, x.as_slice(), &mut row);
            for &(j, v) in &row {
                h[(i, j)] += v;
            }
        }
        h
    }

    /// Snapshots of `∇h` at the given states (columns).
    pub fn nonlinear_snapshots(&self, states: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), states.ncols());
        for j in 0..states.ncols() {
            let x = states.column(j).into_owned();
            out.set_column(j, &self.nonlinear_gradient(&x));
        }
        out
    }
}

/// Three-point second-difference matrix, periodic or with homogeneous
/// Dirichlet closure, scaled by `1/h²`.
pub fn second_difference(n: usize, h: f64, periodic: bool) -> Vec<(usize, usize, f64)> {
    let s = 1.0 / (h * h);
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, -2.0 * s));
        if i + 1 < n {
            t.push((i, i + 1, s));
            t.push((i + 1, i, s));
        } else if periodic && n > 2 {
            t.push((i, 0, s));
            t.push((0, i, s));
        }
    }
    t
}

fn block_diag(n: usize, top: &[(usize, usize, f64)], bottom: &[(usize, usize, f64)]) -> Csr {
    let mut t: Vec<(usize, usize, f64)> = top.to_vec();
    t.extend(bottom.iter().map(|&(r, c, v)| (r + n, c + n, v)));
    Csr::from_triplets(2 * n, 2 * n, t)
}

fn scaled(t: &[(usize, usize, f64)], f: f64) -> Vec<(usize, usize, f64)> {
    t.iter().map(|&(r, c, v)| (r, c, v * f)).collect()
}

fn identity(n: usize) -> Vec<(usize, usize, f64)> {
    (0..n).map(|i| (i, i, 1.0)).collect()
}

/// Cubic spline bump `φ(η)` used for the wave initial displacement.
pub fn cubic_spline(eta: f64) -> f64 {
    let e = eta.abs();
    if e <= 1.0 {
        1.0 - 1.5 * e * e + 0.75 * e * e * e
    } else if e <= 2.0 {
        0.25 * (2.0 - e).powi(3)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    /// Initial displacement `φ(scale · |ξ − center|)`.
    pub center: f64,
    pub scale: f64,
}

impl Default for WaveParams {
    fn default() -> Self {
        WaveParams {
            c: 0.1,
            a: 0.0,
            b: 1.0,
            center: 0.5,
            scale: 10.0,
        }
    }
}

/// Periodic linear wave equation on `n` grid points `ξ_j = a + j h`,
/// `h = (b − a)/n`, with `M = diag(−c² D, I)`.
pub fn wave_system(n: usize, params: WaveParams) -> Result<HamiltonianSystem> {
    if n < 3 {
        return Err(Error::InvalidArgument("wave model needs n >= 3".into()));
    }
    let h = (params.b - params.a) / n as f64;
    let d = second_difference(n, h, true);
    let linear = block_diag(n, &scaled(&d, -params.c * params.c), &identity(n));
    let grid: Vec<f64> = (1..=n).map(|j| params.a + j as f64 * h).collect();
    let mut x0 = DVector::zeros(2 * n);
    for (j, &xi) in grid.iter().enumerate() {
        x0[j] = cubic_spline(params.scale * (xi - params.center).abs());
    }
    HamiltonianSystem::new("wave", linear, Nonlinearity::None { n }, x0, grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineGordonParams {
    pub a: f64,
    pub b: f64,
    pub v: f64,
    pub xi0: f64,
}

impl Default for SineGordonParams {
    fn default() -> Self {
        SineGordonParams {
            a: 0.0,
            b: 50.0,
            v: 0.2,
            xi0: 10.0,
        }
    }
}

impl SineGordonParams {
    /// Exact solitary wave `4 arctan(exp((ξ − ξ₀ − vt)/√(1−v²)))`.
    pub fn exact(&self, t: f64, xi: f64) -> f64 {
        4.0 * ((xi - self.xi0 - self.v * t) / (1.0 - self.v * self.v).sqrt()).exp().atan()
    }

    /// Time derivative of [`Self::exact`].
    pub fn exact_dt(&self, t: f64, xi: f64) -> f64 {
        let g = 1.0 / (1.0 - self.v * self.v).sqrt();
        let e = ((xi - self.xi0 - self.v * t) * g).exp();
        -4.0 * self.v * g * e / (1.0 + e * e)
    }
}

/// Sine-Gordon equation with Dirichlet data on `ξ_j = a + j h`, `j = 1..n`,
/// `h = (b − a)/(n + 1)`; boundary values frozen at the exact solution at
/// `t = 0`.
pub fn sine_gordon_system(n: usize, params: SineGordonParams) -> Result<HamiltonianSystem> {
    if n < 2 {
        return Err(Error::InvalidArgument("sine-Gordon model needs n >= 2".into()));
    }
    if !(params.v > 0.0 && params.v < 1.0) {
        return Err(Error::InvalidArgument(format!("velocity must lie in (0, 1), got {}", params.v)));
    }
    let h = (params.b - params.a) / (n + 1) as f64;
    let d = second_difference(n, h, false);
    let linear = block_diag(n, &scaled(&d, -1.0), &identity(n));
    let grid: Vec<f64> = (1..=n).map(|j| params.a + j as f64 * h).collect();
    let mut x0 = DVector::zeros(2 * n);
    for (j, &xi) in grid.iter().enumerate() {
        x0[j] = params.exact(0.0, xi);
        x0[n + j] = params.exact_dt(0.0, xi);
    }
    let nonlinearity = Nonlinearity::SineGordon {
        n,
        phi_a: params.exact(0.0, params.a),
        phi_b: params.exact(0.0, params.b),
        inv_h2: 1.0 / (h * h),
    };
    HamiltonianSystem::new("sine-gordon", linear, nonlinearity, x0, grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchrodingerParams {
    pub length: f64,
    pub eps: f64,
    pub c: f64,
    pub xi0: f64,
}

impl Default for SchrodingerParams {
    fn default() -> Self {
        SchrodingerParams {
            length: 2.0 * PI / 0.11,
            eps: 1.0932,
            c: 1.0,
            xi0: 0.0,
        }
    }
}

/// Cubic Schrödinger equation on the periodic grid `ξ_j = −L/2 + j h`,
/// `h = L/n`, split into real and imaginary parts.
pub fn schrodinger_system(n: usize, params: SchrodingerParams) -> Result<HamiltonianSystem> {
    if n < 3 {
        return Err(Error::InvalidArgument("Schrödinger model needs n >= 3".into()));
    }
    let h = params.length / n as f64;
    let d = scaled(&second_difference(n, h, true), -1.0);
    let linear = block_diag(n, &d, &d);
    let grid: Vec<f64> = (0..n).map(|j| -params.length / 2.0 + j as f64 * h).collect();
    let mut x0 = DVector::zeros(2 * n);
    for (j, &xi) in grid.iter().enumerate() {
        let r = xi - params.xi0;
        let amp = 2f64.sqrt() / r.cosh();
        let phase = params.c * r / 2.0;
        x0[j] = amp * phase.cos();
        x0[n + j] = amp * phase.sin();
    }
    let nonlinearity = Nonlinearity::Schrodinger { n, eps: params.eps };
    HamiltonianSystem::new("schrodinger", linear, nonlinearity, x0, grid)
}

/// Particle-in-cell Vlasov model with field `E(ξ) = 3 cos(4πξ)`: positions
/// `q`, velocities `p`, `M = diag(0, I)`.
pub fn vlasov_system(n: usize, seed: u64) -> Result<HamiltonianSystem> {
    vlasov_system_with(n, &VlasovIcParams::default(), seed)
}

pub fn vlasov_system_with(n: usize, ic: &VlasovIcParams, seed: u64) -> Result<HamiltonianSystem> {
    if n == 0 {
        return Err(Error::InvalidArgument("Vlasov model needs at least one particle".into()));
    }
    let (q, p) = sample_vlasov_ic(n, ic, seed)?;
    let mut x0 = DVector::zeros(2 * n);
    x0.rows_mut(0, n).copy_from(&q);
    x0.rows_mut(n, n).copy_from(&p);
    let linear = block_diag(n, &[], &identity(n));
    let nonlinearity = Nonlinearity::Vlasov {
        n,
        amplitude: 3.0,
        wavenumber: 4.0 * PI,
    };
    let grid = (0..n).map(|j| j as f64).collect();
    HamiltonianSystem::new("vlasov", linear, nonlinearity, x0, grid)
}

/// `J ∇H` assembled as a dense product, for cross-checking [`HamiltonianSystem::rhs`].
pub fn dense_rhs(sys: &HamiltonianSystem, x: &DVector<f64>) -> DVector<f64> {
    let g = sys.linear().to_dense() * x + sys.nonlinear_gradient(x);
    j_mul(&DMatrix::from_column_slice(g.len(), 1, g.as_slice())).column(0).into_owned()
}
