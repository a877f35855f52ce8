//! Tangent spaces, metrics, projections and Riemannian gradients.
//!
//! Tangent vectors at `X` are parametrized as `Z = X J W + J X⊥ K` with `W`
//! symmetric and `X⊥` an orthonormal basis of `range(X)^⊥`. Two metrics are
//! supported:
//!
//! * canonical-like: `g(Z1, Z2) = tr(W1ᵀW2)/ρ + tr(K1ᵀK2)`,
//! * Euclidean: `g(Z1, Z2) = tr(Z1ᵀZ2)`.
//!
//! The `2n × 2n` operators `G_X`, `S_{X,Y}` and `H_X` are only ever applied
//! through `2n × 2k` products. In `H_X` the term `J X⊥ X⊥ᵀ Jᵀ` uses the
//! identity `X⊥ X⊥ᵀ = I − X (XᵀX)⁻¹ Xᵀ`, so no complement basis is needed on
//! the optimizer path.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::symplectic::{j_mul, jt_mul, mul_j, skew, skew_form, sym, symplectic_inverse, SymplecticPoint, TangentVector};

/// Riemannian metric on `Sp(2k, 2n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    CanonicalLike { rho: f64 },
    Euclidean,
}

impl Metric {
    pub const DEFAULT_RHO: f64 = 0.5;

    pub fn canonical(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        Ok(Metric::CanonicalLike { rho })
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            Metric::CanonicalLike { .. } => "C",
            Metric::Euclidean => "E",
        }
    }
}

impl Default for Metric {
    fn default() -> Self {
        Metric::CanonicalLike {
            rho: Self::DEFAULT_RHO,
        }
    }
}

/// Orthonormal basis `X⊥` of the orthogonal complement of `range(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplementBasis {
    entries: DMatrix<f64>,
}

impl ComplementBasis {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Coordinates `(W, K)` of a tangent vector `Z = X J W + J X⊥ K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentCoordinates {
    pub w: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

/// Computes `X⊥` from a Householder QR of `[X, I]`: the first `2k` columns of
/// the full orthogonal factor span `range(X)`, the rest its complement.
pub fn orthonormal_complement(x: &SymplecticPoint) -> Result<ComplementBasis> {
    let mat = x.matrix();
    let (rows, cols) = mat.shape();
    let sv = mat.clone().singular_values();
    let ratio = sv.min() / sv.max();
    if !(ratio >= 1e-10) {
        return Err(Error::RankDeficient { ratio });
    }
    let mut aug = DMatrix::zeros(rows, cols + rows);
    aug.columns_mut(0, cols).copy_from(mat);
    aug.columns_mut(cols, rows).fill_with_identity();
    let q = aug.qr().q();
    Ok(ComplementBasis {
        entries: q.columns(cols, rows - cols).into_owned(),
    })
}

/// Recovers `(W, K)` from a tangent vector. Dense solve with the
/// `2(n−k)`-dimensional matrix `X⊥ᵀ J X⊥`; test scale only.
pub fn tangent_coordinates(
    x: &SymplecticPoint,
    complement: &ComplementBasis,
    z: &DMatrix<f64>,
) -> Result<TangentCoordinates> {
    let xperp = complement.entries();
    // W = J_{2k}ᵀ X⁺ Z
    let w = sym(&jt_mul(&(symplectic_inverse(x.matrix()) * z)));
    let k = if xperp.ncols() == 0 {
        DMatrix::zeros(0, z.ncols())
    } else {
        let lhs = skew_form(xperp, xperp);
        let rhs = xperp.tr_mul(z);
        lhs.lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem("X_perp^T J X_perp is singular".into()))?
    };
    Ok(TangentCoordinates { w, k })
}

/// Assembles `X J W + J X⊥ K`.
pub fn tangent_from_coordinates(
    x: &SymplecticPoint,
    complement: &ComplementBasis,
    coords: &TangentCoordinates,
) -> DMatrix<f64> {
    let mut z = mul_j(x.matrix()) * &coords.w;
    if complement.entries().ncols() > 0 {
        z += j_mul(&(complement.entries() * &coords.k));
    }
    z
}

/// Metric inner product of two tangent vectors at `X`.
pub fn metric_inner(
    metric: Metric,
    x: &SymplecticPoint,
    complement: &ComplementBasis,
    z1: &DMatrix<f64>,
    z2: &DMatrix<f64>,
) -> Result<f64> {
    match metric {
        Metric::Euclidean => Ok(z1.dot(z2)),
        Metric::CanonicalLike { rho } => {
            let c1 = tangent_coordinates(x, complement, z1)?;
            let c2 = tangent_coordinates(x, complement, z2)?;
            Ok(c1.w.dot(&c2.w) / rho + c1.k.dot(&c2.k))
        }
    }
}

/// Solves `P Ω + Ω P = C` for skew `Ω`, with `P` symmetric positive definite
/// and `C` skew, by diagonalizing `P`.
pub fn solve_skew_lyapunov(p: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !p.is_square() || p.shape() != c.shape() {
        return Err(Error::Shape(format!(
            "Lyapunov coefficient {:?} and right-hand side {:?} disagree",
            p.shape(),
            c.shape()
        )));
    }
    let eig = SymmetricEigen::new(sym(p));
    let min_eig = eig.eigenvalues.min();
    if !(min_eig > 0.0) {
        return Err(Error::NotSpd { min_eig });
    }
    let q = &eig.eigenvectors;
    let lam = &eig.eigenvalues;
    let mut ct = q.tr_mul(c) * q;
    for j in 0..ct.ncols() {
        for i in 0..ct.nrows() {
            ct[(i, j)] /= lam[i] + lam[j];
        }
    }
    Ok(skew(&(q * ct * q.transpose())))
}

/// `G_X Y = Y − ½ X J (XᵀJᵀY)`.
pub fn apply_g(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    y - mul_j(x) * x.tr_mul(&jt_mul(y)) * 0.5
}

/// `H_X Y = (ρ/2) X XᵀY + J X⊥X⊥ᵀ JᵀY`.
pub fn apply_h(x: &DMatrix<f64>, y: &DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>> {
    let jty = jt_mul(y);
    let chol = x
        .tr_mul(x)
        .cholesky()
        .ok_or(Error::NotSpd { min_eig: f64::NAN })?;
    let coeffs = chol.solve(&x.tr_mul(&jty));
    let complement_part = &jty - x * coeffs;
    Ok(x * x.tr_mul(y) * (rho / 2.0) + j_mul(&complement_part))
}

/// `S_{X,V} J X` with `S_{X,V} = V (XJ)ᵀ + XJ Vᵀ`.
fn s_times_jx(x: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    // (XJ)ᵀ J X = Jᵀ (XᵀJX)
    v * jt_mul(&skew_form(x, x)) + mul_j(x) * skew_form(v, x)
}

/// Dense `S_{X,V}`; used by the full Cayley transform.
pub fn s_matrix(x: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let xj = mul_j(x);
    v * xj.transpose() + xj * v.transpose()
}

/// The Lyapunov multiplier `Ω_{X,Y}` of the Euclidean projection.
pub fn euclidean_multiplier(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rhs = skew(&x.tr_mul(&jt_mul(y))) * 2.0;
    solve_skew_lyapunov(&x.tr_mul(x), &rhs)
}

/// Orthogonal projection of `Y` onto the tangent space at `X`.
pub fn project_tangent(metric: Metric, x: &SymplecticPoint, y: &DMatrix<f64>) -> Result<TangentVector> {
    let xm = x.matrix();
    check_same_shape(xm, y)?;
    let z = match metric {
        Metric::CanonicalLike { .. } => s_times_jx(xm, &apply_g(xm, y)),
        Metric::Euclidean => {
            let omega = euclidean_multiplier(xm, y)?;
            y - j_mul(&(xm * omega))
        }
    };
    Ok(TangentVector::new_unchecked(z))
}

/// Riemannian gradient from the Euclidean gradient of a smooth extension.
pub fn riemannian_gradient(metric: Metric, x: &SymplecticPoint, egrad: &DMatrix<f64>) -> Result<TangentVector> {
    let xm = x.matrix();
    check_same_shape(xm, egrad)?;
    match metric {
        Metric::CanonicalLike { rho } => {
            let hy = apply_h(xm, egrad, rho)?;
            Ok(TangentVector::new_unchecked(s_times_jx(xm, &hy)))
        }
        Metric::Euclidean => project_tangent(metric, x, egrad),
    }
}

fn check_same_shape(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if x.shape() != y.shape() {
        return Err(Error::Shape(format!(
            "expected {:?}, got {:?}",
            x.shape(),
            y.shape()
        )));
    }
    Ok(())
}
