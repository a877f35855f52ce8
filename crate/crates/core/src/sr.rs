//! SR decomposition `A = S R` with `S ∈ Sp(2k, 2n)` and `R` in the
//! normalized set `T⁰_{2k}(P_{2k})`, computed by symplectic Gram–Schmidt.
//!
//! Column pairs are processed in shuffled order: pair `j` of `A Pᵀ` is
//! `(a_j, a_{k+j})`. Each pair is split off by a diagonal elementary SR
//! (DESR) step, `r11 = sqrt|ω|`, `r22 = sign(ω) r11`, with `ω = a1ᵀ J a2`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::symplectic::{j_mul, perfect_shuffle, skew_form, SymplecticPoint};

/// Relative breakdown threshold: DESR fails when `|ω| ≤ tol · ‖a1‖ ‖a2‖`.
pub const DEFAULT_BREAKDOWN_TOL: f64 = 1e-14;

/// Factors of a diagonal elementary SR decomposition `[a1, a2] = [s1, s2] diag(r11, r22)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesrFactors {
    pub s1: DVector<f64>,
    pub s2: DVector<f64>,
    pub r11: f64,
    pub r22: f64,
}

/// `A = Ŝ R̂` with `ŜᵀJŜ = Ĵ` and `R̂` block upper triangular with diagonal
/// `2 × 2` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PspsFactors {
    pub s_hat: DMatrix<f64>,
    pub r_hat: DMatrix<f64>,
}

/// `A = S R` with `S` symplectic and `R ∈ T⁰_{2k}(P_{2k})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SrFactors {
    pub s: SymplecticPoint,
    pub r: DMatrix<f64>,
}

/// Which orthogonalization ordering the Gram–Schmidt sweep uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GramSchmidtVariant {
    /// All coefficients of pair `j` from the original columns.
    Basic,
    /// Remaining columns updated as soon as a pair is finalized.
    #[default]
    Modified,
}

fn desr_columns(a1: &DVector<f64>, a2: &DVector<f64>, tol: f64, pair: usize) -> Result<DesrFactors> {
    let n = a1.len() / 2;
    // ω = a1ᵀ J a2 with J a2 = [a2_bot; −a2_top]
    let omega = a1.rows(0, n).dot(&a2.rows(n, n)) - a1.rows(n, n).dot(&a2.rows(0, n));
    let threshold = tol * a1.norm() * a2.norm();
    if omega.abs() <= threshold || !omega.is_finite() {
        return Err(Error::Breakdown {
            pair,
            omega,
            threshold,
        });
    }
    let r11 = omega.abs().sqrt();
    let r22 = omega.signum() * r11;
    Ok(DesrFactors {
        s1: a1 / r11,
        s2: a2 / r22,
        r11,
        r22,
    })
}

/// DESR decomposition of a `2n × 2` matrix.
pub fn desr(a: &DMatrix<f64>, breakdown_tol: f64) -> Result<DesrFactors> {
    if a.ncols() != 2 || a.nrows() % 2 != 0 {
        return Err(Error::Shape(format!(
            "DESR needs a 2n x 2 matrix, got {:?}",
            a.shape()
        )));
    }
    desr_columns(
        &a.column(0).into_owned(),
        &a.column(1).into_owned(),
        breakdown_tol,
        0,
    )
}

fn check_shape(a: &DMatrix<f64>) -> Result<(usize, usize)> {
    let (rows, cols) = a.shape();
    if rows % 2 != 0 || cols % 2 != 0 || cols == 0 || cols > rows {
        return Err(Error::Shape(format!(
            "symplectic Gram-Schmidt needs a 2n x 2k matrix with k <= n, got {rows} x {cols}"
        )));
    }
    Ok((rows / 2, cols / 2))
}

/// `J_2ᵀ Ŝ_iᵀ J A_j` for a 2-column block `s` and a 2-column block `a`.
fn coupling(s: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = skew_form(s, a);
    // J_2ᵀ = [[0, −1], [1, 0]]
    DMatrix::from_row_slice(
        2,
        2,
        &[-m[(1, 0)], -m[(1, 1)], m[(0, 0)], m[(0, 1)]],
    )
}

fn set_pair(s_hat: &mut DMatrix<f64>, r_hat: &mut DMatrix<f64>, j: usize, f: &DesrFactors) {
    s_hat.set_column(2 * j, &f.s1);
    s_hat.set_column(2 * j + 1, &f.s2);
    r_hat[(2 * j, 2 * j)] = f.r11;
    r_hat[(2 * j + 1, 2 * j + 1)] = f.r22;
}

/// Basic block symplectic Gram–Schmidt on consecutive column pairs of `A`.
pub fn sgs_basic(a: &DMatrix<f64>, breakdown_tol: f64) -> Result<PspsFactors> {
    let (_, k) = check_shape(a)?;
    let mut s_hat = DMatrix::zeros(a.nrows(), a.ncols());
    let mut r_hat = DMatrix::zeros(2 * k, 2 * k);
    for j in 0..k {
        let a_j = a.columns(2 * j, 2).into_owned();
        let mut w = a_j.clone();
        for i in 0..j {
            let s_i = s_hat.columns(2 * i, 2).into_owned();
            let r_ij = coupling(&s_i, &a_j);
            w -= &s_i * &r_ij;
            r_hat.view_mut((2 * i, 2 * j), (2, 2)).copy_from(&r_ij);
        }
        let f = desr_columns(&w.column(0).into_owned(), &w.column(1).into_owned(), breakdown_tol, j)?;
        set_pair(&mut s_hat, &mut r_hat, j, &f);
    }
    Ok(PspsFactors { s_hat, r_hat })
}

/// Modified block symplectic Gram–Schmidt: once pair `j` is normalized, its
/// component is removed from every later pair before those are processed.
pub fn sgs_modified(a: &DMatrix<f64>, breakdown_tol: f64) -> Result<PspsFactors> {
    let (_, k) = check_shape(a)?;
    let mut work = a.clone();
    let mut s_hat = DMatrix::zeros(a.nrows(), a.ncols());
    let mut r_hat = DMatrix::zeros(2 * k, 2 * k);
    for j in 0..k {
        let f = desr_columns(
            &work.column(2 * j).into_owned(),
            &work.column(2 * j + 1).into_owned(),
            breakdown_tol,
            j,
        )?;
        set_pair(&mut s_hat, &mut r_hat, j, &f);
        if j + 1 == k {
            break;
        }
        let s_j = s_hat.columns(2 * j, 2).into_owned();
        let rest = work.columns(2 * (j + 1), 2 * (k - j - 1)).into_owned();
        // Row block j of R̂: J_2ᵀ S_jᵀ J [A_{j+1} … A_k]
        let m = skew_form(&s_j, &rest);
        let mut r_row = DMatrix::zeros(2, rest.ncols());
        r_row.row_mut(0).copy_from(&(-m.row(1)));
        r_row.row_mut(1).copy_from(&m.row(0));
        let updated = rest - &s_j * &r_row;
        work.columns_mut(2 * (j + 1), updated.ncols()).copy_from(&updated);
        r_hat
            .view_mut((2 * j, 2 * (j + 1)), (2, r_row.ncols()))
            .copy_from(&r_row);
    }
    Ok(PspsFactors { s_hat, r_hat })
}

/// SR decomposition of `A` (modified Gram–Schmidt ordering).
pub fn sgs(a: &DMatrix<f64>, breakdown_tol: f64) -> Result<SrFactors> {
    sgs_with(a, breakdown_tol, GramSchmidtVariant::Modified)
}

/// SR decomposition with an explicit Gram–Schmidt variant.
pub fn sgs_with(a: &DMatrix<f64>, breakdown_tol: f64, variant: GramSchmidtVariant) -> Result<SrFactors> {
    let (_, k) = check_shape(a)?;
    let shuffle = perfect_shuffle(k);
    let shuffled = shuffle.shuffle_columns(a);
    let PspsFactors { s_hat, r_hat } = match variant {
        GramSchmidtVariant::Basic => sgs_basic(&shuffled, breakdown_tol)?,
        GramSchmidtVariant::Modified => sgs_modified(&shuffled, breakdown_tol)?,
    };
    Ok(SrFactors {
        s: SymplecticPoint::new_unchecked(shuffle.unshuffle_columns(&s_hat)),
        r: shuffle.conjugate_back(&r_hat),
    })
}

/// Checks the three conditions defining `T⁰_{2k}(P_{2k})` exactly:
/// `P R Pᵀ` upper triangular, `r_{2j−1,2j} = 0`, `r_{2j−1,2j−1} > 0`,
/// `|r_{2j,2j}| = r_{2j−1,2j−1}`.
pub fn in_normalized_triangular_set(r: &DMatrix<f64>) -> bool {
    let k = r.ncols() / 2;
    if r.nrows() != 2 * k || r.ncols() % 2 != 0 {
        return false;
    }
    let r_hat = perfect_shuffle(k).conjugate(r);
    let upper = (0..2 * k).all(|i| (0..i).all(|j| r_hat[(i, j)] == 0.0));
    let blocks = (0..k).all(|j| {
        let d1 = r_hat[(2 * j, 2 * j)];
        let d2 = r_hat[(2 * j + 1, 2 * j + 1)];
        r_hat[(2 * j, 2 * j + 1)] == 0.0 && d1 > 0.0 && d2.abs() == d1
    });
    upper && blocks
}

/// Determinant criterion for SR existence: every even leading minor of
/// `P AᵀJA Pᵀ` is nonzero relative to the scale of `AᵀJA`. Exponential in
/// nothing, but cubic per minor; meant for small test instances.
pub fn even_minor_check(a: &DMatrix<f64>) -> bool {
    even_minor_check_with(a, 1e-10)
}

pub fn even_minor_check_with(a: &DMatrix<f64>, rel_tol: f64) -> bool {
    let k = a.ncols() / 2;
    let gram = a.tr_mul(&j_mul(a));
    let scale = gram.norm().max(f64::MIN_POSITIVE);
    let m = perfect_shuffle(k).conjugate(&gram) / scale;
    (1..=k).all(|j| {
        let minor = m.view((0, 0), (2 * j, 2 * j)).into_owned().determinant();
        minor.abs() > rel_tol
    })
}
