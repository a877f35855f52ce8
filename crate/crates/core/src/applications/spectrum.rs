use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::optimizer::{minimize, SolverOptions, SolverResult, SolverStatus};
use crate::symplectic::{j_mul, jt_mul, skew, sym, Dims, SymplecticPoint};

use super::problems::TraceProblem;

/// `SᵀMS = diag(D, D)` with `S` symplectic and `D` nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct WilliamsonForm {
    pub s: DMatrix<f64>,
    pub d: DVector<f64>,
}

/// How the reduced matrix `XᵀAX` was diagonalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagonalizer {
    Williamson,
    /// Orthosymplectic eigenvectors of the `J`-commuting part, used when
    /// `XᵀAX` is singular or numerically so.
    Orthosymplectic,
}

#[derive(Debug, Clone)]
pub struct SymplecticSpectrum {
    pub values: Vec<f64>,
    /// Column `j` of `u` pairs with column `j` of `v`.
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// `(‖A u_j − d_j J v_j‖, ‖A v_j + d_j J u_j‖)`.
    pub residuals: Vec<(f64, f64)>,
    /// `‖SᵀS − I‖_F` of the small diagonalizer.
    pub orthogonality_defect: f64,
    pub diagonalizer: Diagonalizer,
    pub solver: SolverResult,
}

impl SymplecticSpectrum {
    pub fn status(&self) -> SolverStatus {
        self.solver.status
    }
}

fn check_even_square(m: &DMatrix<f64>) -> Result<usize> {
    if !m.is_square() || m.nrows() % 2 != 0 || m.nrows() == 0 {
        return Err(Error::Shape(format!("expected a nonempty 2k x 2k matrix, got {:?}", m.shape())));
    }
    Ok(m.nrows() / 2)
}

/// Removes the components of `v` along the columns of `basis[.., ..count]`
/// (twice, for stability) and returns the remaining norm.
fn orthogonalize(v: &mut DVector<f64>, basis: &DMatrix<f64>, cols: &[usize]) -> f64 {
    for _ in 0..2 {
        for &c in cols {
            let b = basis.column(c);
            let coef = b.dot(v);
            v.axpy(-coef, &b, 1.0);
        }
    }
    v.norm()
}

/// Williamson normal form of a symmetric positive definite `2k × 2k` matrix.
///
/// With `W̃ = M^{-1/2} J M^{-1/2}`, an orthonormal `Q` bringing `W̃` to
/// `[[0, Δ], [−Δ, 0]]` is assembled from eigenvectors `q` of the symmetric
/// matrix `W̃ᵀW̃` paired with `−W̃q/μ`.
pub fn williamson_small(m: &DMatrix<f64>) -> Result<WilliamsonForm> {
    let k = check_even_square(m)?;
    let eig = SymmetricEigen::new(sym(m));
    let min_eig = eig.eigenvalues.min();
    if !(min_eig > 0.0) {
        return Err(Error::NotSpd { min_eig });
    }
    let inv_sqrt = {
        let scale = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
        let mut q = eig.eigenvectors.clone();
        for (j, mut col) in q.column_iter_mut().enumerate() {
            col *= scale[j].sqrt();
        }
        &q * q.transpose()
    };
    let wt = skew(&(&inv_sqrt * j_mul(&inv_sqrt)));
    let normal = SymmetricEigen::new(sym(&wt.tr_mul(&wt)));
    let mut order: Vec<usize> = (0..2 * k).collect();
    order.sort_by(|&a, &b| normal.eigenvalues[b].total_cmp(&normal.eigenvalues[a]));

    let mut q = DMatrix::zeros(2 * k, 2 * k);
    let mut delta = DVector::zeros(k);
    let mut chosen: Vec<usize> = Vec::with_capacity(2 * k);
    let mut pairs = 0;
    for &idx in &order {
        if pairs == k {
            break;
        }
        let mut v = normal.eigenvectors.column(idx).into_owned();
        if orthogonalize(&mut v, &q, &chosen) < 0.5 {
            continue;
        }
        v.normalize_mut();
        let mut w = -(&wt * &v);
        q.set_column(pairs, &v);
        chosen.push(pairs);
        let wn = orthogonalize(&mut w, &q, &chosen);
        if !(wn > 0.0) {
            return Err(Error::SingularSystem("degenerate skew canonical form".into()));
        }
        w /= wn;
        q.set_column(k + pairs, &w);
        chosen.push(k + pairs);
        delta[pairs] = v.dot(&(&wt * &w));
        pairs += 1;
    }
    if pairs < k || delta.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::SingularSystem("could not pair the skew spectrum".into()));
    }
    let mut s = &inv_sqrt * q;
    for j in 0..k {
        let f = 1.0 / delta[j].sqrt();
        s.column_mut(j).scale_mut(f);
        s.column_mut(k + j).scale_mut(f);
    }
    Ok(WilliamsonForm {
        s,
        d: delta.map(|x| 1.0 / x),
    })
}

/// Orthosymplectic `K = [V, JᵀV]` diagonalizing the `J`-commuting part
/// `(M + JᵀMJ)/2` of a symmetric `M`; exact when `M` commutes with `J`.
pub fn orthosymplectic_diagonalization(m: &DMatrix<f64>) -> Result<WilliamsonForm> {
    let k = check_even_square(m)?;
    let commuting = sym(&((m + jt_mul(&crate::symplectic::mul_j(m))) * 0.5));
    let eig = SymmetricEigen::new(commuting.clone());
    let mut order: Vec<usize> = (0..2 * k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut s = DMatrix::zeros(2 * k, 2 * k);
    let mut d = DVector::zeros(k);
    let mut chosen = Vec::with_capacity(2 * k);
    let mut pairs = 0;
    for &idx in &order {
        if pairs == k {
            break;
        }
        let mut v = eig.eigenvectors.column(idx).into_owned();
        if orthogonalize(&mut v, &s, &chosen) < 0.5 {
            continue;
        }
        v.normalize_mut();
        let w = jt_mul(&DMatrix::from_column_slice(2 * k, 1, v.as_slice()));
        s.set_column(pairs, &v);
        s.set_column(k + pairs, &w.column(0));
        chosen.push(pairs);
        chosen.push(k + pairs);
        d[pairs] = v.dot(&(&commuting * &v));
        pairs += 1;
    }
    if pairs < k {
        return Err(Error::SingularSystem("could not pair the commuting spectrum".into()));
    }
    Ok(WilliamsonForm { s, d })
}

/// Smallest `k` symplectic eigenvalues of a symmetric positive
/// (semi)definite `A` by trace minimization from the canonical point,
/// followed by diagonalization of `X*ᵀAX*`.
pub fn symplectic_eigenpairs(a: &DMatrix<f64>, k: usize, options: &SolverOptions) -> Result<SymplecticSpectrum> {
    let problem = TraceProblem::new(a.clone(), k)?;
    let x0 = SymplecticPoint::canonical(Dims::new(a.nrows() / 2, k)?);
    let solver = minimize(&problem, x0, options)?;
    if solver.status != SolverStatus::GradToleranceReached {
        log::warn!("trace minimization stopped with {:?}", solver.status);
    }
    let x = solver.x.matrix();
    let reduced = sym(&x.tr_mul(&(a * x)));
    let eig = reduced.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let (form, diagonalizer) = if lo > 1e-8 * hi {
        match williamson_small(&reduced) {
            Ok(f) => (f, Diagonalizer::Williamson),
            Err(_) => (orthosymplectic_diagonalization(&reduced)?, Diagonalizer::Orthosymplectic),
        }
    } else {
        (orthosymplectic_diagonalization(&reduced)?, Diagonalizer::Orthosymplectic)
    };
    let y = x * &form.s;
    let u = y.columns(0, k).into_owned();
    let v = y.columns(k, k).into_owned();
    let au = a * &u;
    let av = a * &v;
    let ju = j_mul(&u);
    let jv = j_mul(&v);
    let residuals = (0..k)
        .map(|j| {
            let d = form.d[j];
            (
                (au.column(j) - jv.column(j) * d).norm(),
                (av.column(j) + ju.column(j) * d).norm(),
            )
        })
        .collect();
    let orthogonality_defect = (form.s.tr_mul(&form.s) - DMatrix::identity(2 * k, 2 * k)).norm();
    Ok(SymplecticSpectrum {
        values: form.d.iter().copied().collect(),
        u,
        v,
        residuals,
        orthogonality_defect,
        diagonalizer,
        solver,
    })
}
