use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::optimizer::Problem;
use crate::symplectic::{j_mul, jt_mul, mul_j, mul_jt, Dims, SymplecticPoint};

/// The 4×4 SUM gate `[[1,0,0,0],[1,1,0,0],[0,0,1,−1],[0,0,0,1]]`.
pub fn sum_gate() -> SymplecticPoint {
    SymplecticPoint::new_unchecked(DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            1.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, -1.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    ))
}

/// Nearest symplectic matrix: `f(X) = ‖X − W‖_F²`.
#[derive(Debug, Clone)]
pub struct TargetProblem {
    target: DMatrix<f64>,
    dims: Dims,
}

impl TargetProblem {
    pub fn new(target: DMatrix<f64>) -> Result<Self> {
        let dims = Dims::of(&target)?;
        Ok(TargetProblem { target, dims })
    }

    pub fn target(&self) -> &DMatrix<f64> {
        &self.target
    }

    pub fn cost_grad(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let diff = x - &self.target;
        (diff.norm_squared(), diff * 2.0)
    }
}

impl Problem for TargetProblem {
    fn dims(&self) -> Dims {
        self.dims
    }
    fn cost(&self, x: &DMatrix<f64>) -> f64 {
        (x - &self.target).norm_squared()
    }
    fn euclidean_gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (x - &self.target) * 2.0
    }
}

/// Trace minimization: `f(X) = tr(XᵀAX)` with `A` symmetric.
#[derive(Debug, Clone)]
pub struct TraceProblem {
    a: DMatrix<f64>,
    dims: Dims,
}

impl TraceProblem {
    pub fn new(a: DMatrix<f64>, k: usize) -> Result<Self> {
        if !a.is_square() || a.nrows() % 2 != 0 {
            return Err(Error::Shape(format!("A must be 2n x 2n, got {:?}", a.shape())));
        }
        let asym = (&a - a.transpose()).norm();
        if asym > 1e-12 * a.norm().max(1.0) {
            return Err(Error::InvalidArgument(format!("A is not symmetric (asymmetry {asym:.3e})")));
        }
        let dims = Dims::new(a.nrows() / 2, k)?;
        Ok(TraceProblem { a, dims })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn cost_grad(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let ax = &self.a * x;
        (x.dot(&ax), ax * 2.0)
    }
}

impl Problem for TraceProblem {
    fn dims(&self) -> Dims {
        self.dims
    }
    fn cost(&self, x: &DMatrix<f64>) -> f64 {
        x.dot(&(&self.a * x))
    }
    fn euclidean_gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (&self.a * x) * 2.0
    }
}

/// Proper symplectic decomposition: `f(X) = ‖A − X X⁺ A‖_F²` for a snapshot
/// matrix `A`.
#[derive(Debug, Clone)]
pub struct PsdProblem {
    snapshots: DMatrix<f64>,
    dims: Dims,
}

impl PsdProblem {
    pub fn new(snapshots: DMatrix<f64>, k: usize) -> Result<Self> {
        if snapshots.ncols() == 0 || snapshots.nrows() % 2 != 0 {
            return Err(Error::Shape(format!(
                "snapshot matrix must be 2n x s with s >= 1, got {:?}",
                snapshots.shape()
            )));
        }
        let dims = Dims::new(snapshots.nrows() / 2, k)?;
        Ok(PsdProblem { snapshots, dims })
    }

    pub fn snapshots(&self) -> &DMatrix<f64> {
        &self.snapshots
    }

    fn residual(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        // X⁺A = J₂ₖᵀ Xᵀ J A
        let coeffs = jt_mul(&x.tr_mul(&j_mul(&self.snapshots)));
        &self.snapshots - x * coeffs
    }

    /// Cost and Euclidean gradient
    /// `−2 (E Aᵀ Jᵀ X J₂ₖ + J A Eᵀ X J₂ₖᵀ)` with `E = A − X X⁺ A`.
    pub fn cost_grad(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let a = &self.snapshots;
        let e = self.residual(x);
        let first = &e * a.tr_mul(&mul_j(&jt_mul(x)));
        let second = j_mul(&(a * e.tr_mul(&mul_jt(x))));
        (e.norm_squared(), (first + second) * -2.0)
    }
}

impl Problem for PsdProblem {
    fn dims(&self) -> Dims {
        self.dims
    }
    fn cost(&self, x: &DMatrix<f64>) -> f64 {
        self.residual(x).norm_squared()
    }
    fn euclidean_gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.cost_grad(x).1
    }
}

/// Block-diagonal orthosymplectic basis `diag(X̂, X̂)` where `X̂` holds the `k`
/// leading left singular vectors of `[A_q, A_p]`.
pub fn cotangent_lift(snapshots: &DMatrix<f64>, k: usize) -> Result<SymplecticPoint> {
    if snapshots.nrows() % 2 != 0 || snapshots.ncols() == 0 {
        return Err(Error::Shape(format!("snapshot matrix has shape {:?}", snapshots.shape())));
    }
    let n = snapshots.nrows() / 2;
    let s = snapshots.ncols();
    if k == 0 || k > n.min(2 * s) {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={}", n.min(2 * s))));
    }
    let mut stacked = DMatrix::zeros(n, 2 * s);
    stacked.columns_mut(0, s).copy_from(&snapshots.rows(0, n));
    stacked.columns_mut(s, s).copy_from(&snapshots.rows(n, n));
    let basis = leading_left_singular_vectors(stacked, k)?;
    let mut x = DMatrix::zeros(2 * n, 2 * k);
    x.view_mut((0, 0), (n, k)).copy_from(&basis);
    x.view_mut((n, k), (n, k)).copy_from(&basis);
    Ok(SymplecticPoint::new_unchecked(x))
}

/// The `count` leading left singular vectors, sorted by singular value, with
/// the largest-magnitude entry of each column made positive.
pub fn leading_left_singular_vectors(a: DMatrix<f64>, count: usize) -> Result<DMatrix<f64>> {
    let rows = a.nrows();
    let svd = a.svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::SingularSystem("SVD did not converge".into()))?;
    if count > u.ncols() {
        return Err(Error::InvalidArgument(format!(
            "requested {count} singular vectors, only {} available",
            u.ncols()
        )));
    }
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]).then(i.cmp(&j)));
    let mut out = DMatrix::zeros(rows, count);
    for (col, &idx) in order.iter().take(count).enumerate() {
        let mut v = u.column(idx).into_owned();
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        out.set_column(col, &v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sr::{sgs, DEFAULT_BREAKDOWN_TOL};
    use crate::symplectic::{canonical_embedding, symplecticity_residual};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn central_difference<F: Fn(&DMatrix<f64>) -> f64>(f: F, x: &DMatrix<f64>, dir: &DMatrix<f64>, h: f64) -> f64 {
        (f(&(x + dir * h)) - f(&(x - dir * h))) / (2.0 * h)
    }

    #[test]
    fn sum_gate_is_symplectic() {
        let w = sum_gate();
        assert!(symplecticity_residual(w.matrix()) <= 1e-15);
        let p = TargetProblem::new(w.matrix().clone()).unwrap();
        let (f, g) = p.cost_grad(w.matrix());
        assert_eq!(f, 0.0);
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn target_unit_perturbation() {
        let w = sum_gate().into_matrix();
        let p = TargetProblem::new(w.clone()).unwrap();
        let mut x = w;
        x[(2, 1)] += 1.0;
        let (f, g) = p.cost_grad(&x);
        assert_eq!(f, 1.0);
        assert_eq!(g[(2, 1)], 2.0);
        assert_eq!(g.norm(), 2.0);
    }

    #[test]
    fn trace_at_canonical_point() {
        let p = TraceProblem::new(DMatrix::identity(8, 8), 3).unwrap();
        assert_eq!(p.cost(&canonical_embedding(4, 3)), 6.0);
        let mut asym = DMatrix::identity(4, 4);
        asym[(0, 1)] = 1.0;
        assert!(TraceProblem::new(asym, 1).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_matrix(20, 4, &mut rng);
        let dir = random_matrix(20, 4, &mut rng);
        let b = random_matrix(20, 20, &mut rng);
        let target = TargetProblem::new(random_matrix(20, 4, &mut rng)).unwrap();
        let trace = TraceProblem::new(&b * b.transpose(), 2).unwrap();
        let psd = PsdProblem::new(random_matrix(20, 7, &mut rng), 2).unwrap();
        let problems: [&dyn Problem; 3] = [&target, &trace, &psd];
        for p in problems {
            let fd = central_difference(|m| p.cost(m), &x, &dir, 1e-6);
            let an = p.euclidean_gradient(&x).dot(&dir);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
        }
    }

    #[test]
    fn psd_cost_vanishes_on_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = sgs(&random_matrix(10, 4, &mut rng), DEFAULT_BREAKDOWN_TOL).unwrap().s.into_matrix();
        let a = &x * random_matrix(4, 6, &mut rng);
        let p = PsdProblem::new(a, 2).unwrap();
        let (f, g) = p.cost_grad(&x);
        assert!(f < 1e-20);
        assert!(g.norm() < 1e-9);
    }

    #[test]
    fn psd_cost_is_invariant_under_symplectic_change_of_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = sgs(&random_matrix(12, 4, &mut rng), DEFAULT_BREAKDOWN_TOL).unwrap().s.into_matrix();
        let s = sgs(&random_matrix(4, 4, &mut rng), DEFAULT_BREAKDOWN_TOL).unwrap().s.into_matrix();
        let p = PsdProblem::new(random_matrix(12, 5, &mut rng), 2).unwrap();
        let (f1, _) = p.cost_grad(&x);
        let (f2, _) = p.cost_grad(&(&x * s));
        assert!((f1 - f2).abs() <= 1e-10 * f1);
    }

    #[test]
    fn cotangent_lift_of_canonical_columns() {
        let e = canonical_embedding(5, 2);
        let x = cotangent_lift(&e, 2).unwrap();
        assert!((x.matrix() - &e).norm() < 1e-12);
    }

    #[test]
    fn cotangent_lift_is_orthosymplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(16, 5, &mut rng);
        let x = cotangent_lift(&a, 3).unwrap();
        let m = x.matrix();
        assert!((m.tr_mul(m) - DMatrix::identity(6, 6)).norm() < 1e-12);
        assert!(symplecticity_residual(m) < 1e-12);
        assert_eq!(m.view((0, 3), (8, 3)).norm(), 0.0);
        assert_eq!(m.view((8, 0), (8, 3)).norm(), 0.0);
        assert!(cotangent_lift(&a, 9).is_err());
    }
}
