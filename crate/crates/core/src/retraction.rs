//! Retractions on `Sp(2k, 2n)`: Cayley (full and economical forms),
//! quasi-geodesic and SR.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{apply_g, s_matrix};
use crate::linalg::{solve_with_condition, spectral_norm_estimate};
use crate::sr::{sgs, DEFAULT_BREAKDOWN_TOL};
use crate::symplectic::{j_mul, jt_mul, mul_j, skew_form, SymplecticPoint, TangentVector};

/// Condition estimate above which a Cayley solve is reported singular.
pub const CAYLEY_COND_LIMIT: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RetractionKind {
    CayleyFull,
    CayleyEconomical,
    QuasiGeodesic,
    SR,
}

impl RetractionKind {
    pub fn short_name(&self) -> &'static str {
        match self {
            RetractionKind::CayleyFull | RetractionKind::CayleyEconomical => "Cay",
            RetractionKind::QuasiGeodesic => "QGeo",
            RetractionKind::SR => "SR",
        }
    }
}

impl fmt::Display for RetractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for RetractionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cay" | "cayley" => Ok(RetractionKind::CayleyEconomical),
            "cayfull" | "cayley-full" => Ok(RetractionKind::CayleyFull),
            "qgeo" | "quasi-geodesic" => Ok(RetractionKind::QuasiGeodesic),
            "sr" => Ok(RetractionKind::SR),
            other => Err(Error::InvalidArgument(format!("unknown retraction '{other}'"))),
        }
    }
}

/// `R_X(Z)` for the chosen retraction.
pub fn retract(kind: RetractionKind, x: &SymplecticPoint, z: &TangentVector) -> Result<SymplecticPoint> {
    check_shape(x, z.entries())?;
    match kind {
        RetractionKind::CayleyFull => cayley_full(x, z),
        RetractionKind::CayleyEconomical => cayley_economical(x, z),
        RetractionKind::QuasiGeodesic => quasi_geodesic(x, z),
        RetractionKind::SR => sr_retract(x, z),
    }
}

/// Like [`retract`], but for the SR retraction optionally rescales `Z` so
/// that its estimated spectral norm stays below one.
pub fn retract_with_safeguard(
    kind: RetractionKind,
    x: &SymplecticPoint,
    z: &TangentVector,
    sr_safeguard: bool,
) -> Result<SymplecticPoint> {
    if sr_safeguard && kind == RetractionKind::SR {
        let norm = spectral_norm_estimate(z.entries(), 20, 1e-6);
        if norm >= 0.99 {
            return sr_retract(x, &z.scaled(0.99 / norm));
        }
    }
    retract(kind, x, z)
}

/// `(I − ½ S J)⁻¹ (I + ½ S J) X` with the dense `2n × 2n` matrix
/// `S = S_{X, G_X Z}`.
pub fn cayley_full(x: &SymplecticPoint, z: &TangentVector) -> Result<SymplecticPoint> {
    let xm = x.matrix();
    check_shape(x, z.entries())?;
    let s = s_matrix(xm, &apply_g(xm, z.entries()));
    let sj = mul_j(&s) * 0.5;
    let dim = sj.nrows();
    let lhs = DMatrix::identity(dim, dim) - &sj;
    let rhs = xm + &sj * xm;
    let (out, cond) = solve_with_condition(&lhs, &rhs).ok_or(Error::SingularCayley { cond: f64::INFINITY })?;
    if cond > CAYLEY_COND_LIMIT {
        return Err(Error::SingularCayley { cond });
    }
    Ok(SymplecticPoint::new_unchecked(out))
}

/// The same Cayley transform through a `2k × 2k` solve:
/// `R = −X + (H + 2X) M⁻¹`, `H = Z − X J₂ₖᵀ XᵀJZ`,
/// `M = ¼ J₂ₖᵀ HᵀJH − ½ J₂ₖᵀ XᵀJZ + I`.
pub fn cayley_economical(x: &SymplecticPoint, z: &TangentVector) -> Result<SymplecticPoint> {
    let xm = x.matrix();
    let zm = z.entries();
    check_shape(x, zm)?;
    let jt_xjz = jt_mul(&skew_form(xm, zm));
    let h = zm - xm * &jt_xjz;
    let dim = xm.ncols();
    let m = jt_mul(&skew_form(&h, &h)) * 0.25 - jt_xjz * 0.5 + DMatrix::identity(dim, dim);
    // Solve Mᵀ Yᵀ = (H + 2X)ᵀ for Y = (H + 2X) M⁻¹.
    let lhs = m.transpose();
    let rhs = (h + xm * 2.0).transpose();
    let (yt, cond) = solve_with_condition(&lhs, &rhs).ok_or(Error::SingularCayley { cond: f64::INFINITY })?;
    if cond > CAYLEY_COND_LIMIT {
        return Err(Error::SingularCayley { cond });
    }
    Ok(SymplecticPoint::new_unchecked(yt.transpose() - xm))
}

/// `[X, Z] · exp([[−JW, JZᵀJZ], [I, −JW]]) · [I; 0] · exp(JW)` with
/// `W = XᵀJZ`.
pub fn quasi_geodesic(x: &SymplecticPoint, z: &TangentVector) -> Result<SymplecticPoint> {
    let xm = x.matrix();
    let zm = z.entries();
    check_shape(x, zm)?;
    let d = xm.ncols();
    let jw = j_mul(&skew_form(xm, zm));
    let mut block = DMatrix::zeros(2 * d, 2 * d);
    block.view_mut((0, 0), (d, d)).copy_from(&(-&jw));
    block.view_mut((0, d), (d, d)).copy_from(&j_mul(&skew_form(zm, zm)));
    block.view_mut((d, 0), (d, d)).fill_with_identity();
    block.view_mut((d, d), (d, d)).copy_from(&(-&jw));
    let e = block.exp();
    let lead = xm * e.view((0, 0), (d, d)) + zm * e.view((d, 0), (d, d));
    Ok(SymplecticPoint::new_unchecked(lead * jw.exp()))
}

/// `sf(X + Z)`, the symplectic factor of the SR decomposition of `X + Z`.
pub fn sr_retract(x: &SymplecticPoint, z: &TangentVector) -> Result<SymplecticPoint> {
    check_shape(x, z.entries())?;
    Ok(sgs(&(x.matrix() + z.entries()), DEFAULT_BREAKDOWN_TOL)?.s)
}

fn check_shape(x: &SymplecticPoint, z: &DMatrix<f64>) -> Result<()> {
    if x.matrix().shape() != z.shape() {
        return Err(Error::Shape(format!(
            "tangent vector {:?} does not match point {:?}",
            z.shape(),
            x.matrix().shape()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{project_tangent, Metric};
    use crate::symplectic::{poisson, symplecticity_residual, Dims};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ALL: [RetractionKind; 4] = [
        RetractionKind::CayleyFull,
        RetractionKind::CayleyEconomical,
        RetractionKind::QuasiGeodesic,
        RetractionKind::SR,
    ];

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_point(n: usize, k: usize, rng: &mut ChaCha8Rng) -> SymplecticPoint {
        loop {
            if let Ok(f) = sgs(&random_matrix(2 * n, 2 * k, rng), DEFAULT_BREAKDOWN_TOL) {
                if f.s.matrix().norm() < 10.0 * ((n * k) as f64).sqrt() {
                    return f.s;
                }
            }
        }
    }

    fn random_tangent(x: &SymplecticPoint, rng: &mut ChaCha8Rng) -> TangentVector {
        let (r, c) = x.matrix().shape();
        project_tangent(Metric::Euclidean, x, &random_matrix(r, c, rng)).unwrap()
    }

    #[test]
    fn zero_step_returns_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_point(6, 2, &mut rng);
        let zero = TangentVector::zeros(&x);
        for kind in ALL {
            let y = retract(kind, &x, &zero).unwrap();
            assert!((y.matrix() - x.matrix()).norm() <= 1e-13 * x.matrix().norm(), "{kind:?}");
        }
    }

    #[test]
    fn first_order_remainder_is_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_point(20, 4, &mut rng);
        let z = random_tangent(&x, &mut rng);
        let z = z.scaled(1.0 / z.entries().norm());
        let t = 1e-3;
        for kind in ALL {
            let err = |s: f64| {
                let y = retract(kind, &x, &z.scaled(s)).unwrap();
                (y.matrix() - x.matrix() - z.entries() * s).norm()
            };
            let ratio = err(t / 2.0) / err(t);
            assert!((0.2..=0.3).contains(&ratio), "{kind:?}: ratio {ratio}");
        }
    }

    #[test]
    fn results_are_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_point(8, 3, &mut rng);
        let z = random_tangent(&x, &mut rng);
        let z = z.scaled(0.3 / z.entries().norm());
        for kind in ALL {
            let y = retract(kind, &x, &z).unwrap();
            assert!(symplecticity_residual(y.matrix()) < 1e-10, "{kind:?}");
        }
    }

    #[test]
    fn cayley_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let n = rng.random_range(1..=30);
            let k = rng.random_range(1..=n.min(5));
            let x = random_point(n, k, &mut rng);
            let z = random_tangent(&x, &mut rng);
            let z = z.scaled(rng.random_range(0.01..1.0) / z.entries().norm());
            let full = cayley_full(&x, &z).unwrap();
            let econ = cayley_economical(&x, &z).unwrap();
            let diff = (full.matrix() - econ.matrix()).norm();
            assert!(diff <= 1e-10 * full.matrix().norm(), "n={n} k={k}: {diff}");
        }
    }

    #[test]
    fn cayley_reports_singularity() {
        // X = I₂, Z = J W with W = s [[0,1],[1,0]] makes the Hamiltonian
        // J-scaled generator have eigenvalue s; s = 2 is exactly singular.
        let x = SymplecticPoint::new(DMatrix::identity(2, 2)).unwrap();
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        for s in [2.0, 2.0 * (1.0 - 1e-16)] {
            let z = TangentVector::new(&x, j_mul(&(&w * s))).unwrap();
            assert!(matches!(cayley_economical(&x, &z), Err(Error::SingularCayley { .. })));
            assert!(matches!(cayley_full(&x, &z), Err(Error::SingularCayley { .. })));
        }
        let z = TangentVector::new(&x, j_mul(&(&w * 1.9))).unwrap();
        assert!(cayley_economical(&x, &z).is_ok());
    }

    #[test]
    fn quasi_geodesic_on_square_point_is_symplectic() {
        let x = SymplecticPoint::new(poisson(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = random_tangent(&x, &mut rng);
        let y = quasi_geodesic(&x, &z).unwrap();
        assert!(symplecticity_residual(y.matrix()) < 1e-12);
    }

    #[test]
    fn sr_large_steps_stay_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let x = SymplecticPoint::canonical(Dims::new(10, 3).unwrap());
            let z = random_tangent(&x, &mut rng);
            let norm = z.entries().clone().singular_values().max();
            let z = z.scaled(0.99 / norm);
            let y = sr_retract(&x, &z).unwrap();
            assert!(symplecticity_residual(y.matrix()) <= 1e-12);
        }
    }

    #[test]
    fn sr_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_point(7, 2, &mut rng);
        let z = random_tangent(&x, &mut rng);
        let a = sr_retract(&x, &z).unwrap();
        let b = sr_retract(&x, &z).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn safeguard_rescales_long_steps() {
        let x = SymplecticPoint::canonical(Dims::new(4, 1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let z = random_tangent(&x, &mut rng);
        let z = z.scaled(5.0 / z.entries().norm());
        let guarded = retract_with_safeguard(RetractionKind::SR, &x, &z, true).unwrap();
        let norm = spectral_norm_estimate(z.entries(), 20, 1e-6);
        let manual = sr_retract(&x, &z.scaled(0.99 / norm)).unwrap();
        assert_eq!(guarded.matrix(), manual.matrix());
        let off = retract_with_safeguard(RetractionKind::SR, &x, &z, false);
        let plain = sr_retract(&x, &z);
        assert_eq!(off.ok().map(|p| p.into_matrix()), plain.ok().map(|p| p.into_matrix()));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let x = SymplecticPoint::canonical(Dims::new(3, 1).unwrap());
        let z = TangentVector::new_unchecked(DMatrix::zeros(4, 2));
        for kind in ALL {
            assert!(matches!(retract(kind, &x, &z), Err(Error::Shape(_))));
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("SR".parse::<RetractionKind>().unwrap(), RetractionKind::SR);
        assert_eq!("Cay".parse::<RetractionKind>().unwrap(), RetractionKind::CayleyEconomical);
        assert_eq!("QGeo".parse::<RetractionKind>().unwrap(), RetractionKind::QuasiGeodesic);
        assert!("foo".parse::<RetractionKind>().is_err());
    }
}
