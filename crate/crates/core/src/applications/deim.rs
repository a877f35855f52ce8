use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A nonlinear energy `h: R^{2n} → R` whose gradient components each depend
/// on a few state entries. Buffers passed to `component` and `hessian_row`
/// need to be valid only on `support(i)`.
pub trait LocalNonlinearity: Sync {
    fn dim(&self) -> usize;

    fn support(&self, i: usize) -> Vec<usize>;

    fn energy(&self, x: &[f64]) -> f64;

    fn component(&self, i: usize, x: &[f64]) -> f64;

    /// Nonzero entries `(j, ∂²h/∂x_i∂x_j)` of row `i` of the Hessian.
    fn hessian_row(&self, i: usize, x: &[f64], out: &mut Vec<(usize, f64)>);

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.component(i, x);
        }
    }

    /// True when the gradient is constant, so the Hessian vanishes.
    fn is_affine(&self) -> bool {
        false
    }
}

/// Greedy DEIM interpolation indices for the columns of `v`.
pub fn deim_select(v: &DMatrix<f64>) -> Result<Vec<usize>> {
    let m = v.ncols();
    if m == 0 || m > v.nrows() {
        return Err(Error::Shape(format!("DEIM basis has shape {:?}", v.shape())));
    }
    let mut indices = Vec::with_capacity(m);
    for j in 0..m {
        let col = v.column(j);
        let residual: DVector<f64> = if j == 0 {
            col.into_owned()
        } else {
            let basis = v.columns(0, j);
            let block = DMatrix::from_fn(j, j, |r, c| basis[(indices[r], c)]);
            let rhs = DVector::from_fn(j, |r, _| col[indices[r]]);
            let coef = block
                .lu()
                .solve(&rhs)
                .ok_or(Error::SingularSelection { column: j })?;
            col - basis * coef
        };
        let pivot = residual.iamax();
        if !(residual[pivot].abs() > 1e-13 * col.amax().max(f64::MIN_POSITIVE)) {
            return Err(Error::SingularSelection { column: j });
        }
        indices.push(pivot);
    }
    Ok(indices)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeimVariant {
    /// `UᵀMU x̃ + UᵀV(PᵀV)⁻¹ Pᵀ∇h(U x̃)`.
    PsdDeim,
    /// `UᵀMU x̃ + UᵀV(PᵀV)⁻¹ Pᵀ∇h(P(VᵀP)⁻¹VᵀU x̃)`, the gradient of a
    /// reduced Hamiltonian.
    StructurePreserving,
}

/// Precomputed reduced gradient `∇H̃` with an interpolated nonlinearity.
#[derive(Debug, Clone)]
pub struct DeimReducedRhs {
    variant: DeimVariant,
    reduced_linear: DMatrix<f64>,
    /// `UᵀV(PᵀV)⁻¹`, `2k × m`.
    coeff: DMatrix<f64>,
    indices: Vec<usize>,
    /// Entries of the full state that must be materialized, with their rows
    /// of the lifting map (rows of `U`, or of `P(VᵀP)⁻¹VᵀU`).
    stencil: Vec<usize>,
    lift: DMatrix<f64>,
    lift_shift: DVector<f64>,
    /// `UᵀM x_ref` and `½ x_refᵀM x_ref` for an affine reference state.
    linear_shift: DVector<f64>,
    energy_shift: f64,
    buffer_len: usize,
}

/// Reference state of an affine approximation `x ≈ x_ref + U x̃`, with
/// `M x_ref` for the quadratic part of the energy.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineReference {
    pub state: DVector<f64>,
    pub linear_image: DVector<f64>,
}

/// Scratch state for repeated evaluation.
#[derive(Debug, Clone)]
pub struct DeimWorkspace {
    buffer: Vec<f64>,
    row: Vec<(usize, f64)>,
}

impl DeimReducedRhs {
    /// `reduced_linear` is `UᵀMU`; `v` is the DEIM basis and `indices` its
    /// interpolation points.
    pub fn new<N: LocalNonlinearity + ?Sized>(
        u: &DMatrix<f64>,
        reduced_linear: DMatrix<f64>,
        v: &DMatrix<f64>,
        indices: &[usize],
        variant: DeimVariant,
        nonlinearity: &N,
    ) -> Result<Self> {
        Self::with_reference(u, reduced_linear, v, indices, variant, nonlinearity, None)
    }

    /// As [`Self::new`] for the affine approximation `x ≈ x_ref + U x̃`.
    pub fn with_reference<N: LocalNonlinearity + ?Sized>(
        u: &DMatrix<f64>,
        reduced_linear: DMatrix<f64>,
        v: &DMatrix<f64>,
        indices: &[usize],
        variant: DeimVariant,
        nonlinearity: &N,
        reference: Option<&AffineReference>,
    ) -> Result<Self> {
        let m = indices.len();
        if v.ncols() != m || v.nrows() != u.nrows() || nonlinearity.dim() != u.nrows() {
            return Err(Error::Shape("DEIM basis, indices and reduced basis disagree".into()));
        }
        if let Some(r) = reference {
            if r.state.len() != u.nrows() || r.linear_image.len() != u.nrows() {
                return Err(Error::Shape("reference state has the wrong length".into()));
            }
        }
        let pv = DMatrix::from_fn(m, m, |r, c| v[(indices[r], c)]);
        // coeffᵀ = (PᵀV)⁻ᵀ VᵀU
        let coeff_t = pv
            .transpose()
            .lu()
            .solve(&v.tr_mul(u))
            .ok_or(Error::SingularSelection { column: m })?;
        let coeff = coeff_t.transpose();
        let (stencil, lift, lift_shift) = match variant {
            DeimVariant::PsdDeim => {
                let mut stencil: Vec<usize> = indices.iter().flat_map(|&i| nonlinearity.support(i)).collect();
                stencil.sort_unstable();
                stencil.dedup();
                let lift = DMatrix::from_fn(stencil.len(), u.ncols(), |r, c| u[(stencil[r], c)]);
                let shift = DVector::from_fn(stencil.len(), |r, _| reference.map_or(0.0, |x| x.state[stencil[r]]));
                (stencil, lift, shift)
            }
            // The lifted state P(VᵀP)⁻¹VᵀU x̃ lives on the interpolation
            // indices only, and its values there are coeffᵀ x̃.
            DeimVariant::StructurePreserving => {
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by_key(|&r| indices[r]);
                let stencil = order.iter().map(|&r| indices[r]).collect();
                let lift = DMatrix::from_fn(m, u.ncols(), |r, c| coeff_t[(order[r], c)]);
                let shift = match reference {
                    Some(x) => {
                        let s = pv
                            .transpose()
                            .lu()
                            .solve(&v.tr_mul(&x.state))
                            .ok_or(Error::SingularSelection { column: m })?;
                        DVector::from_fn(m, |r, _| s[order[r]])
                    }
                    None => DVector::zeros(m),
                };
                (stencil, lift, shift)
            }
        };
        let (linear_shift, energy_shift) = match reference {
            Some(x) => (u.tr_mul(&x.linear_image), 0.5 * x.state.dot(&x.linear_image)),
            None => (DVector::zeros(u.ncols()), 0.0),
        };
        Ok(DeimReducedRhs {
            variant,
            reduced_linear,
            coeff,
            indices: indices.to_vec(),
            stencil,
            lift,
            lift_shift,
            linear_shift,
            energy_shift,
            buffer_len: u.nrows(),
        })
    }

    pub fn variant(&self) -> DeimVariant {
        self.variant
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn workspace(&self) -> DeimWorkspace {
        DeimWorkspace {
            buffer: vec![0.0; self.buffer_len],
            row: Vec::new(),
        }
    }

    fn fill(&self, xt: &DVector<f64>, ws: &mut DeimWorkspace) {
        let vals = &self.lift * xt + &self.lift_shift;
        for (r, &i) in self.stencil.iter().enumerate() {
            ws.buffer[i] = vals[r];
        }
    }

    /// `∇H̃(x̃)`.
    pub fn gradient<N: LocalNonlinearity + ?Sized>(&self, nl: &N, xt: &DVector<f64>, ws: &mut DeimWorkspace) -> DVector<f64> {
        self.fill(xt, ws);
        let sampled = DVector::from_iterator(self.indices.len(), self.indices.iter().map(|&i| nl.component(i, &ws.buffer)));
        &self.reduced_linear * xt + &self.linear_shift + &self.coeff * sampled
    }

    /// Jacobian of [`Self::gradient`].
    pub fn jacobian<N: LocalNonlinearity + ?Sized>(&self, nl: &N, xt: &DVector<f64>, ws: &mut DeimWorkspace) -> DMatrix<f64> {
        let mut jac = self.reduced_linear.clone();
        if nl.is_affine() {
            return jac;
        }
        self.fill(xt, ws);
        let dim = xt.len();
        let mut sampled = DMatrix::zeros(self.indices.len(), dim);
        for (r, &i) in self.indices.iter().enumerate() {
            ws.row.clear();
            nl.hessian_row(i, &ws.buffer, &mut ws.row);
            for &(j, h) in &ws.row {
                if let Ok(pos) = self.stencil.binary_search(&j) {
                    for c in 0..dim {
                        sampled[(r, c)] += h * self.lift[(pos, c)];
                    }
                }
            }
        }
        jac.gemm(1.0, &self.coeff, &sampled, 1.0);
        jac
    }

    /// Reduced energy of the structure-preserving variant,
    /// `½xᵀMx + h(P(VᵀP)⁻¹Vᵀx)` at `x = x_ref + U x̃`.
    pub fn structured_energy<N: LocalNonlinearity + ?Sized>(&self, nl: &N, xt: &DVector<f64>) -> f64 {
        let mut full = vec![0.0; self.buffer_len];
        if self.variant == DeimVariant::StructurePreserving {
            let vals = &self.lift * xt + &self.lift_shift;
            for (r, &i) in self.stencil.iter().enumerate() {
                full[i] = vals[r];
            }
        }
        0.5 * xt.dot(&(&self.reduced_linear * xt)) + self.linear_shift.dot(xt) + self.energy_shift + nl.energy(&full)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `h(x) = Σ cos(x_i) x_{i+1}` on a ring; gradient components couple
    /// three neighbours.
    struct Ring(usize);

    impl LocalNonlinearity for Ring {
        fn dim(&self) -> usize {
            self.0
        }
        fn support(&self, i: usize) -> Vec<usize> {
            let n = self.0;
            vec![(i + n - 1) % n, i, (i + 1) % n]
        }
        fn energy(&self, x: &[f64]) -> f64 {
            let n = self.0;
            (0..n).map(|i| x[i].cos() * x[(i + 1) % n]).sum()
        }
        fn component(&self, i: usize, x: &[f64]) -> f64 {
            let n = self.0;
            -x[i].sin() * x[(i + 1) % n] + x[(i + n - 1) % n].cos()
        }
        fn hessian_row(&self, i: usize, x: &[f64], out: &mut Vec<(usize, f64)>) {
            let n = self.0;
            let (p, s) = ((i + n - 1) % n, (i + 1) % n);
            out.push((i, -x[i].cos() * x[s]));
            out.push((s, -x[i].sin()));
            out.push((p, -x[p].sin()));
        }
    }

    fn orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        a.qr().q()
    }

    #[test]
    fn select_unit_vectors() {
        let mut e5 = DMatrix::zeros(8, 1);
        e5[(5, 0)] = 1.0;
        assert_eq!(deim_select(&e5).unwrap(), vec![5]);
        let mut e12 = DMatrix::zeros(6, 2);
        e12[(1, 0)] = 1.0;
        e12[(2, 1)] = 1.0;
        let idx = deim_select(&e12).unwrap();
        assert_eq!(idx, vec![1, 2]);
    }

    #[test]
    fn select_rejects_dependent_columns() {
        let mut v = DMatrix::zeros(4, 2);
        v[(0, 0)] = 1.0;
        v[(0, 1)] = 2.0;
        assert!(matches!(deim_select(&v), Err(Error::SingularSelection { column: 1 })));
    }

    #[test]
    fn interpolation_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = orthonormal(40, 8, &mut rng);
        let idx = deim_select(&v).unwrap();
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 8);
        let pv = DMatrix::from_fn(8, 8, |r, c| v[(idx[r], c)]);
        let inv = pv.clone().try_inverse().unwrap();
        assert!(inv.norm().is_finite());
        let w = DVector::from_fn(40, |_, _| rng.random_range(-1.0..1.0));
        let pw = DVector::from_fn(8, |r, _| w[idx[r]]);
        let interp = &v * (&inv * &pw);
        for (r, &i) in idx.iter().enumerate() {
            assert!((interp[i] - pw[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_nonlinearity_gives_linear_part() {
        struct Zero(usize);
        impl LocalNonlinearity for Zero {
            fn dim(&self) -> usize {
                self.0
            }
            fn support(&self, i: usize) -> Vec<usize> {
                vec![i]
            }
            fn energy(&self, _: &[f64]) -> f64 {
                0.0
            }
            fn component(&self, _: usize, _: &[f64]) -> f64 {
                0.0
            }
            fn hessian_row(&self, _: usize, _: &[f64], _: &mut Vec<(usize, f64)>) {}
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = orthonormal(12, 4, &mut rng);
        let v = orthonormal(12, 5, &mut rng);
        let idx = deim_select(&v).unwrap();
        let lin = DMatrix::from_fn(4, 4, |i, j| (i + j) as f64);
        let xt = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        for variant in [DeimVariant::PsdDeim, DeimVariant::StructurePreserving] {
            let op = DeimReducedRhs::new(&u, lin.clone(), &v, &idx, variant, &Zero(12)).unwrap();
            let mut ws = op.workspace();
            assert!((op.gradient(&Zero(12), &xt, &mut ws) - &lin * &xt).norm() < 1e-14);
        }
    }

    #[test]
    fn full_basis_psd_deim_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10;
        let nl = Ring(n);
        let u = orthonormal(n, 4, &mut rng);
        let v = orthonormal(n, n, &mut rng);
        let idx = deim_select(&v).unwrap();
        let lin = DMatrix::zeros(4, 4);
        let op = DeimReducedRhs::new(&u, lin, &v, &idx, DeimVariant::PsdDeim, &nl).unwrap();
        let mut ws = op.workspace();
        let xt = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let x = &u * &xt;
        let mut g = vec![0.0; n];
        nl.gradient(x.as_slice(), &mut g);
        let exact = u.tr_mul(&DVector::from_vec(g));
        assert!((op.gradient(&nl, &xt, &mut ws) - exact).norm() < 1e-12);
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 16;
        let nl = Ring(n);
        let u = orthonormal(n, 4, &mut rng);
        let v = orthonormal(n, 6, &mut rng);
        let idx = deim_select(&v).unwrap();
        let lin = DMatrix::from_fn(4, 4, |i, j| 1.0 / (1.0 + (i + j) as f64));
        let xt = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        for variant in [DeimVariant::PsdDeim, DeimVariant::StructurePreserving] {
            let op = DeimReducedRhs::new(&u, lin.clone(), &v, &idx, variant, &nl).unwrap();
            let mut ws = op.workspace();
            let jac = op.jacobian(&nl, &xt, &mut ws);
            let h = 1e-6;
            for c in 0..4 {
                let mut e = DVector::zeros(4);
                e[c] = h;
                let fd = (op.gradient(&nl, &(&xt + &e), &mut ws) - op.gradient(&nl, &(&xt - &e), &mut ws)) / (2.0 * h);
                assert!((fd - jac.column(c)).norm() < 1e-7, "{variant:?} column {c}");
            }
        }
    }

    #[test]
    fn structured_gradient_is_energy_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 16;
        let nl = Ring(n);
        let u = orthonormal(n, 4, &mut rng);
        let v = orthonormal(n, 6, &mut rng);
        let idx = deim_select(&v).unwrap();
        let b = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let lin = &b + b.transpose();
        let op = DeimReducedRhs::new(&u, lin, &v, &idx, DeimVariant::StructurePreserving, &nl).unwrap();
        let mut ws = op.workspace();
        let xt = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let g = op.gradient(&nl, &xt, &mut ws);
        let h = 1e-6;
        for c in 0..4 {
            let mut e = DVector::zeros(4);
            e[c] = h;
            let fd = (op.structured_energy(&nl, &(&xt + &e)) - op.structured_energy(&nl, &(&xt - &e))) / (2.0 * h);
            assert!((fd - g[c]).abs() < 1e-7);
        }
    }

    #[test]
    fn affine_reference_is_exact_with_full_deim_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 10;
        let nl = Ring(n);
        let u = orthonormal(n, 4, &mut rng);
        let v = orthonormal(n, n, &mut rng);
        let idx = deim_select(&v).unwrap();
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let m = &b + b.transpose();
        let x_ref = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let reference = AffineReference {
            linear_image: &m * &x_ref,
            state: x_ref.clone(),
        };
        let lin = u.tr_mul(&(&m * &u));
        let xt = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let x = &x_ref + &u * &xt;
        let mut g = vec![0.0; n];
        nl.gradient(x.as_slice(), &mut g);
        let exact = u.tr_mul(&(&m * &x + DVector::from_vec(g)));
        for variant in [DeimVariant::PsdDeim, DeimVariant::StructurePreserving] {
            let op =
                DeimReducedRhs::with_reference(&u, lin.clone(), &v, &idx, variant, &nl, Some(&reference)).unwrap();
            let mut ws = op.workspace();
            assert!((op.gradient(&nl, &xt, &mut ws) - &exact).norm() < 1e-11, "{variant:?}");
        }
        let op =
            DeimReducedRhs::with_reference(&u, lin, &v, &idx, DeimVariant::StructurePreserving, &nl, Some(&reference))
                .unwrap();
        let full_energy = 0.5 * x.dot(&(&m * &x)) + nl.energy(x.as_slice());
        assert!((op.structured_energy(&nl, &xt) - full_energy).abs() < 1e-11);
    }
}
