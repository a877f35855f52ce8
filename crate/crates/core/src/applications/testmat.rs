use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::symplectic::{j_mul, sym};

/// Symplectic Gauss transformation `L(l, c, d)` (1-based `l`, `2 ≤ l ≤ n`).
pub fn gauss_transform(n: usize, l: usize, c: f64, d: f64) -> Result<DMatrix<f64>> {
    if l < 2 || l > n {
        return Err(Error::InvalidArgument(format!("l = {l} must lie in 2..={n}")));
    }
    if c == 0.0 || !c.is_finite() || !d.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid Gauss parameters c = {c}, d = {d}")));
    }
    let mut m = DMatrix::identity(2 * n, 2 * n);
    let (a, b) = (l - 2, l - 1);
    m[(a, a)] = c;
    m[(b, b)] = c;
    m[(n + a, n + a)] = 1.0 / c;
    m[(n + b, n + b)] = 1.0 / c;
    m[(a, n + b)] = d;
    m[(b, n + a)] = d;
    Ok(m)
}

/// Random orthosymplectic `[[Re U, Im U], [−Im U, Re U]]` with `U` a unitary
/// drawn from the complex Gaussian ensemble (QR with phase-normalized `R`).
pub fn random_symplectic_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<Complex<f64>>::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex::new(re, im)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut u = qr.q();
    for j in 0..n {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex::new(1.0, 0.0) };
        let mut col = u.column_mut(j);
        col *= phase;
    }
    let mut k = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = u[(i, j)];
            k[(i, j)] = z.re;
            k[(i, n + j)] = z.im;
            k[(n + i, j)] = -z.im;
            k[(n + i, n + j)] = z.re;
        }
    }
    k
}

/// Symmetric positive semidefinite `A = JQ diag(D, D) (JQ)ᵀ` with
/// `Q = K L(round(n/5), 1.2, −√(n/5))` and
/// `D = diag(0, …, 0, m+1, …, n)` (`m` zeros). Returns `A` and the sorted
/// diagonal of `D`.
pub fn spsd_test_matrix(n: usize, m: usize, seed: u64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!("need 0 < m < n, got m = {m}, n = {n}")));
    }
    let l = (n as f64 / 5.0).round() as usize;
    let gauss = gauss_transform(n, l, 1.2, -(n as f64 / 5.0).sqrt())?;
    let q = random_symplectic_orthogonal(n, seed) * gauss;
    let jq = j_mul(&q);
    let values: Vec<f64> = (1..=n).map(|i| if i <= m { 0.0 } else { i as f64 }).collect();
    let mut diag = DVector::zeros(2 * n);
    for (i, &v) in values.iter().enumerate() {
        diag[i] = v;
        diag[n + i] = v;
    }
    let mut scaled = jq.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= diag[j];
    }
    Ok((sym(&(scaled * jq.transpose())), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{poisson, skew_form};

    fn residual(m: &DMatrix<f64>) -> f64 {
        (skew_form(m, m) - poisson(m.ncols() / 2)).norm()
    }

    #[test]
    fn gauss_identity_case() {
        assert_eq!(gauss_transform(4, 3, 1.0, 0.0).unwrap(), DMatrix::identity(8, 8));
        assert!(gauss_transform(4, 1, 1.0, 0.0).is_err());
        assert!(gauss_transform(4, 5, 1.0, 0.0).is_err());
    }

    #[test]
    fn gauss_small_case_by_hand() {
        // n = 3, l = 2: the active indices are (0, 1) and (3, 4).
        let l = gauss_transform(3, 2, 2.0, 0.5).unwrap();
        let expected = DMatrix::from_row_slice(
            6,
            6,
            &[
                2.0, 0.0, 0.0, 0.0, 0.5, 0.0, //
                0.0, 2.0, 0.0, 0.5, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.5, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, 0.5, 0.0, //
                0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
            ],
        );
        assert_eq!(l, expected);
        assert!(residual(&l) <= 1e-15);
    }

    #[test]
    fn gauss_test_parameters_are_symplectic() {
        for n in [10, 100] {
            let l = gauss_transform(n, n / 5, 1.2, -((n / 5) as f64).sqrt()).unwrap();
            assert!(residual(&l) <= 1e-13);
        }
    }

    #[test]
    fn random_orthosymplectic_properties() {
        let k = random_symplectic_orthogonal(6, 3);
        assert!((k.tr_mul(&k) - DMatrix::identity(12, 12)).norm() <= 1e-12);
        assert!(residual(&k) <= 1e-12);
        assert_eq!(k, random_symplectic_orthogonal(6, 3));
        assert_ne!(k, random_symplectic_orthogonal(6, 4));
    }

    #[test]
    fn spsd_matrix_properties() {
        let (a, values) = spsd_test_matrix(10, 2, 7).unwrap();
        assert_eq!(&values[..5], &[0.0, 0.0, 3.0, 4.0, 5.0]);
        assert!((&a - a.transpose()).norm() <= 1e-12);
        let eig = a.clone().symmetric_eigenvalues();
        let scale = eig.amax();
        assert!(eig.iter().all(|&e| e >= -1e-10 * scale));
        let rank = eig.iter().filter(|&&e| e > 1e-9 * scale).count();
        assert_eq!(rank, 2 * (10 - 2));
        // Symplectic eigenvalues are |Im| of the eigenvalues of J A.
        let ja = j_mul(&a);
        let mut im: Vec<f64> = ja.complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
        im.sort_by(f64::total_cmp);
        for (i, v) in values.iter().enumerate() {
            assert!((im[2 * i] - v).abs() < 1e-6 * scale.max(1.0), "{} vs {}", im[2 * i], v);
        }
    }
}
