//! Small dense helpers shared across modules.

use nalgebra::{DMatrix, DVector};

/// Power-iteration estimate of `‖A‖₂` on `AᵀA` from a fixed, non-uniform
/// start vector.
pub fn spectral_norm_estimate(a: &DMatrix<f64>, max_iter: usize, tol: f64) -> f64 {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut v = DVector::from_fn(a.ncols(), |i, _| 1.0 + 1.0 / (i as f64 + 2.0).sqrt());
    v.normalize_mut();
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        let av = a * &v;
        let w = a.tr_mul(&av);
        let wn = w.norm();
        if wn == 0.0 {
            return av.norm();
        }
        let next = av.norm();
        v = w / wn;
        if (next - sigma).abs() <= tol * next {
            return next.max((a * &v).norm());
        }
        sigma = next;
    }
    sigma.max((a * &v).norm())
}

/// Maximum absolute column sum.
pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `A X = B` and returns the solution with a 1-norm condition
/// estimate `‖A‖₁‖A⁻¹‖₁`. `None` when the LU factorization is singular.
pub fn solve_with_condition(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let lu = a.clone().lu();
    let inv = lu.try_inverse()?;
    let cond = norm1(a) * norm1(&inv);
    let x = &inv * b;
    if !cond.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((x, cond))
}
