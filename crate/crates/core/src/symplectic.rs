//! Symplectic linear algebra shared by every other module.
//!
//! The Poisson matrix `J_{2n} = [[0, I], [-I, 0]]` is never formed in the
//! hot paths: multiplying by it is a signed swap of the two row (or column)
//! halves. [`poisson`] materializes it for tests and small dense oracles.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default absolute tolerance on `‖XᵀJX − J‖_F` for a feasible point.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-8;

/// Default absolute tolerance on `‖ZᵀJX + XᵀJZ‖_F` for a tangent vector.
pub const DEFAULT_TANGENCY_TOL: f64 = 1e-8;

/// Half-dimensions of `Sp(2k, 2n)`: points are `2n × 2k` matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n: usize,
    pub k: usize,
}

impl Dims {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= k <= n, got n = {n}, k = {k}"
            )));
        }
        Ok(Self { n, k })
    }

    /// Infers the dimensions from a matrix shape.
    pub fn of(mat: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = mat.shape();
        if rows % 2 != 0 || cols % 2 != 0 {
            return Err(Error::Shape(format!(
                "expected a 2n x 2k matrix, got {rows} x {cols}"
            )));
        }
        Self::new(rows / 2, cols / 2)
    }
}

/// The Poisson matrix `J_{2n}`.
pub fn poisson(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `J · Y` for `Y` with an even number of rows.
pub fn j_mul(y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = y.nrows() / 2;
    let mut out = DMatrix::zeros(y.nrows(), y.ncols());
    out.rows_mut(0, n).copy_from(&y.rows(n, n));
    out.rows_mut(n, n).copy_from(&(-y.rows(0, n)));
    out
}

/// `Jᵀ · Y = −J · Y`.
pub fn jt_mul(y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = y.nrows() / 2;
    let mut out = DMatrix::zeros(y.nrows(), y.ncols());
    out.rows_mut(0, n).copy_from(&(-y.rows(n, n)));
    out.rows_mut(n, n).copy_from(&y.rows(0, n));
    out
}

/// `Y · J` for `Y` with an even number of columns.
pub fn mul_j(y: &DMatrix<f64>) -> DMatrix<f64> {
    let k = y.ncols() / 2;
    let mut out = DMatrix::zeros(y.nrows(), y.ncols());
    out.columns_mut(0, k).copy_from(&(-y.columns(k, k)));
    out.columns_mut(k, k).copy_from(&y.columns(0, k));
    out
}

/// `Y · Jᵀ = −Y · J`.
pub fn mul_jt(y: &DMatrix<f64>) -> DMatrix<f64> {
    let k = y.ncols() / 2;
    let mut out = DMatrix::zeros(y.nrows(), y.ncols());
    out.columns_mut(0, k).copy_from(&y.columns(k, k));
    out.columns_mut(k, k).copy_from(&(-y.columns(0, k)));
    out
}

/// `Aᵀ J B` without forming `J`.
pub fn skew_form(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.tr_mul(&j_mul(b))
}

/// Symmetric part `(A + Aᵀ)/2`.
pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Skew-symmetric part `(A − Aᵀ)/2`.
pub fn skew(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

/// The canonical embedding `E = [e_1..e_k, e_{n+1}..e_{n+k}]` of `I_{2n}`.
pub fn canonical_embedding(n: usize, k: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(2 * n, 2 * k);
    for j in 0..k {
        e[(j, j)] = 1.0;
        e[(n + j, k + j)] = 1.0;
    }
    e
}

/// Symplectic inverse `X⁺ = J_{2k}ᵀ Xᵀ J_{2n}` (a `2k × 2n` left inverse of a
/// symplectic `X`).
pub fn symplectic_inverse(x: &DMatrix<f64>) -> DMatrix<f64> {
    // Xᵀ J = (Jᵀ X)ᵀ
    jt_mul(&jt_mul(x).transpose())
}

/// Feasibility violation `‖XᵀJ_{2n}X − J_{2k}‖_F`.
pub fn symplecticity_residual(x: &DMatrix<f64>) -> f64 {
    let k = x.ncols() / 2;
    (skew_form(x, x) - poisson(k)).norm()
}

/// `‖ZᵀJX + XᵀJZ‖_F`; zero exactly when `Z` is tangent at `X`.
pub fn tangency_residual(x: &DMatrix<f64>, z: &DMatrix<f64>) -> f64 {
    (skew_form(z, x) + skew_form(x, z)).norm()
}

/// A `2n × 2k` matrix that satisfies `XᵀJX = J` to within a tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticPoint {
    dims: Dims,
    mat: DMatrix<f64>,
}

impl SymplecticPoint {
    /// Wraps `mat` with the default feasibility tolerance.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(mat, DEFAULT_FEASIBILITY_TOL)
    }

    /// Warns above `tol` and refuses above `1e3 · tol`.
    pub fn with_tolerance(mat: DMatrix<f64>, tol: f64) -> Result<Self> {
        let dims = Dims::of(&mat)?;
        let residual = symplecticity_residual(&mat);
        if !residual.is_finite() || residual > 1e3 * tol {
            return Err(Error::Infeasible {
                residual,
                limit: 1e3 * tol,
            });
        }
        if residual > tol {
            log::warn!("symplectic point has feasibility residual {residual:.3e} (tol {tol:.1e})");
        }
        Ok(Self { dims, mat })
    }

    /// Skips the feasibility check. Iterates of the optimizer use this: the
    /// retractions are trusted and drift is reported, not rejected.
    pub fn new_unchecked(mat: DMatrix<f64>) -> Self {
        let dims = Dims {
            n: mat.nrows() / 2,
            k: mat.ncols() / 2,
        };
        Self { dims, mat }
    }

    pub fn canonical(dims: Dims) -> Self {
        Self {
            dims,
            mat: canonical_embedding(dims.n, dims.k),
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn residual(&self) -> f64 {
        symplecticity_residual(&self.mat)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        symplectic_inverse(&self.mat)
    }
}

/// A matrix checked to lie in the tangent space at some base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    entries: DMatrix<f64>,
}

impl TangentVector {
    pub fn new(base: &SymplecticPoint, entries: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(base, entries, DEFAULT_TANGENCY_TOL)
    }

    pub fn with_tolerance(base: &SymplecticPoint, entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        if entries.shape() != base.matrix().shape() {
            return Err(Error::Shape(format!(
                "tangent vector {:?} does not match base point {:?}",
                entries.shape(),
                base.matrix().shape()
            )));
        }
        let res = tangency_residual(base.matrix(), &entries);
        if res > tol * (1.0 + entries.norm()) {
            return Err(Error::InvalidArgument(format!(
                "matrix is not tangent (residual {res:.3e})"
            )));
        }
        Ok(Self { entries })
    }

    /// Used by projections, whose output is tangent by construction.
    pub fn new_unchecked(entries: DMatrix<f64>) -> Self {
        Self { entries }
    }

    pub fn zeros(base: &SymplecticPoint) -> Self {
        let (r, c) = base.matrix().shape();
        Self {
            entries: DMatrix::zeros(r, c),
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            entries: &self.entries * t,
        }
    }
}

/// The perfect shuffle `P_{2k} = [e_1, e_3, …, e_{2k−1}, e_2, …, e_{2k}]`.
///
/// Row `a` of `P` has its single one in column `source[a]`, where
/// `source[2j] = j` and `source[2j+1] = k + j` (zero based). Hence `A Pᵀ`
/// interleaves the columns of `A` as `[a_1, a_{k+1}, a_2, a_{k+2}, …]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerfectShuffle {
    k: usize,
    source: Vec<usize>,
}

/// Constructs `P_{2k}`.
pub fn perfect_shuffle(k: usize) -> PerfectShuffle {
    let source = (0..2 * k)
        .map(|a| if a % 2 == 0 { a / 2 } else { k + a / 2 })
        .collect();
    PerfectShuffle { k, source }
}

impl PerfectShuffle {
    pub fn k(&self) -> usize {
        self.k
    }

    /// The index array: row `a` of `P` is `e_{source[a]}ᵀ`.
    pub fn permutation(&self) -> &[usize] {
        &self.source
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(2 * self.k, 2 * self.k);
        for (a, &c) in self.source.iter().enumerate() {
            p[(a, c)] = 1.0;
        }
        p
    }

    /// `A Pᵀ`.
    pub fn shuffle_columns(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(a.nrows(), a.ncols());
        for (dst, &src) in self.source.iter().enumerate() {
            out.set_column(dst, &a.column(src));
        }
        out
    }

    /// `Ŝ P`, the inverse of [`Self::shuffle_columns`].
    pub fn unshuffle_columns(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(s.nrows(), s.ncols());
        for (src, &dst) in self.source.iter().enumerate() {
            out.set_column(dst, &s.column(src));
        }
        out
    }

    /// `P M Pᵀ`.
    pub fn conjugate(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.source.len();
        DMatrix::from_fn(d, d, |a, b| m[(self.source[a], self.source[b])])
    }

    /// `Pᵀ M P`, the inverse of [`Self::conjugate`].
    pub fn conjugate_back(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.source.len();
        let mut out = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                out[(self.source[a], self.source[b])] = m[(a, b)];
            }
        }
        out
    }
}

/// `Ĵ_{2k} = diag(J_2, …, J_2)`.
pub fn block_poisson(k: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * k, 2 * k);
    for b in 0..k {
        j[(2 * b, 2 * b + 1)] = 1.0;
        j[(2 * b + 1, 2 * b)] = -1.0;
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn poisson_basic_identities() {
        assert_eq!(poisson(1), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        for n in 1..6 {
            let j = poisson(n);
            let id = DMatrix::<f64>::identity(2 * n, 2 * n);
            assert_eq!(&j * j.transpose(), id);
            assert_eq!(&j * &j, -&id);
            assert_eq!(j.transpose(), -&j);
        }
    }

    #[test]
    fn structured_products_match_dense_j() {
        let y = random_matrix(8, 6, 1);
        assert_eq!(j_mul(&y), poisson(4) * &y);
        assert_eq!(jt_mul(&y), poisson(4).transpose() * &y);
        assert_eq!(mul_j(&y), &y * poisson(3));
        assert_eq!(mul_jt(&y), &y * poisson(3).transpose());
    }

    #[test]
    fn shuffle_k2_column_order() {
        let p = perfect_shuffle(2).matrix();
        let id = DMatrix::<f64>::identity(4, 4);
        for (col, e) in [0usize, 2, 1, 3].into_iter().enumerate() {
            assert_eq!(p.column(col), id.column(e));
        }
    }

    #[test]
    fn shuffle_k1_is_identity() {
        assert_eq!(perfect_shuffle(1).matrix(), DMatrix::identity(2, 2));
    }

    #[test]
    fn shuffle_conjugates_j_to_block_diagonal() {
        for k in 1..=64 {
            let ps = perfect_shuffle(k);
            let p = ps.matrix();
            assert_eq!(&p * poisson(k) * p.transpose(), block_poisson(k), "k = {k}");
            assert_eq!(&p * p.transpose(), DMatrix::identity(2 * k, 2 * k));
            assert_eq!(ps.conjugate(&poisson(k)), block_poisson(k));
        }
    }

    #[test]
    fn shuffle_helpers_match_dense_products() {
        let ps = perfect_shuffle(3);
        let p = ps.matrix();
        let a = random_matrix(10, 6, 2);
        let m = random_matrix(6, 6, 3);
        assert_eq!(ps.shuffle_columns(&a), &a * p.transpose());
        assert_eq!(ps.unshuffle_columns(&a), &a * &p);
        assert_eq!(ps.conjugate(&m), &p * &m * p.transpose());
        assert_eq!(ps.conjugate_back(&m), p.transpose() * &m * &p);
    }

    #[test]
    fn inverse_of_canonical_embedding() {
        let e = canonical_embedding(5, 2);
        assert_eq!(symplectic_inverse(&e) * &e, DMatrix::identity(4, 4));
    }

    #[test]
    fn inverse_of_square_j() {
        let j = poisson(3);
        assert_eq!(symplectic_inverse(&j), j.transpose());
        assert_eq!(symplectic_inverse(&j) * &j, DMatrix::identity(6, 6));
    }

    #[test]
    fn residual_examples() {
        let e = canonical_embedding(4, 2);
        assert_eq!(symplecticity_residual(&e), 0.0);
        let two_e = &e * 2.0;
        let expected = 3.0 * (4.0f64).sqrt();
        assert!((symplecticity_residual(&two_e) - expected).abs() < 1e-14);
    }

    #[test]
    fn tangency_examples() {
        let e = canonical_embedding(4, 2);
        assert_eq!(tangency_residual(&e, &DMatrix::zeros(8, 4)), 0.0);
        // X is never tangent at X: ZᵀJX + XᵀJZ = 2J.
        let expected = 2.0 * (4.0f64).sqrt();
        assert!((tangency_residual(&e, &e) - expected).abs() < 1e-14);
        let w = sym(&random_matrix(4, 4, 9));
        let z = mul_j(&e) * w;
        assert!(tangency_residual(&e, &z) < 1e-13);
    }

    #[test]
    fn point_construction_checks_feasibility() {
        let e = canonical_embedding(3, 1);
        assert!(SymplecticPoint::new(e.clone()).is_ok());
        // Slightly infeasible: accepted with a warning.
        let mut drift = e.clone();
        drift[(0, 0)] += 1e-7;
        assert!(SymplecticPoint::new(drift).is_ok());
        assert!(matches!(
            SymplecticPoint::new(&e * 2.0),
            Err(Error::Infeasible { .. })
        ));
        assert!(SymplecticPoint::new(DMatrix::zeros(3, 2)).is_err());
    }
}
