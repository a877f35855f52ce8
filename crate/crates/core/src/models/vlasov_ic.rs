use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Two-stream initial density
/// `(1 + ε cos 2πξ) / (√(2π)(a + 1)) · (exp(−v²/2) + (a/σ) exp(−(v − v₀)²/(2σ²)))`
/// and the sampling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VlasovIcParams {
    pub eps: f64,
    pub a: f64,
    pub v0: f64,
    pub sigma: f64,
    pub xi_range: (f64, f64),
    pub v_range: (f64, f64),
    pub grid: usize,
}

impl Default for VlasovIcParams {
    fn default() -> Self {
        VlasovIcParams {
            eps: 0.3,
            a: 0.3,
            v0: 4.0,
            sigma: 1.0,
            xi_range: (0.0, 1.0),
            v_range: (-6.0, 10.0),
            grid: 512,
        }
    }
}

impl VlasovIcParams {
    pub fn density(&self, xi: f64, v: f64) -> f64 {
        let spatial = 1.0 + self.eps * (2.0 * PI * xi).cos();
        let velocity = (-0.5 * v * v).exp()
            + self.a / self.sigma * (-(v - self.v0).powi(2) / (2.0 * self.sigma * self.sigma)).exp();
        spatial * velocity / ((2.0 * PI).sqrt() * (self.a + 1.0))
    }
}

/// Draws `n` particles by inverse-transform sampling of the density
/// tabulated at cell centres of a `grid × grid` mesh, with a uniform jitter
/// inside the chosen cell.
pub fn sample_vlasov_ic(n: usize, params: &VlasovIcParams, seed: u64) -> Result<(DVector<f64>, DVector<f64>)> {
    let g = params.grid;
    let (x_lo, x_hi) = params.xi_range;
    let (v_lo, v_hi) = params.v_range;
    if g == 0 || !(x_hi > x_lo) || !(v_hi > v_lo) {
        return Err(Error::InvalidArgument("invalid sampling grid".into()));
    }
    let dx = (x_hi - x_lo) / g as f64;
    let dv = (v_hi - v_lo) / g as f64;
    let mut cdf = Vec::with_capacity(g * g);
    let mut total = 0.0;
    for i in 0..g {
        let xi = x_lo + (i as f64 + 0.5) * dx;
        for j in 0..g {
            let v = v_lo + (j as f64 + 0.5) * dv;
            let w = params.density(xi, v);
            if !(w >= 0.0) {
                return Err(Error::InvalidArgument("density is negative on the grid".into()));
            }
            total += w;
            cdf.push(total);
        }
    }
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("density vanishes on the grid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = DVector::zeros(n);
    let mut p = DVector::zeros(n);
    for k in 0..n {
        let target = rng.random::<f64>() * total;
        let cell = cdf.partition_point(|&c| c <= target).min(g * g - 1);
        let (i, j) = (cell / g, cell % g);
        q[k] = x_lo + (i as f64 + rng.random::<f64>()) * dx;
        p[k] = v_lo + (j as f64 + rng.random::<f64>()) * dv;
    }
    Ok((q, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

    fn chi_square_p(counts: &[usize], probs: &[f64]) -> f64 {
        let n: usize = counts.iter().sum();
        let stat: f64 = counts
            .iter()
            .zip(probs)
            .map(|(&c, &p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
    }

    #[test]
    fn separable_gaussian_case_passes_goodness_of_fit() {
        let params = VlasovIcParams {
            eps: 0.0,
            a: 0.0,
            ..VlasovIcParams::default()
        };
        let (q, p) = sample_vlasov_ic(100_000, &params, 11).unwrap();
        let bins = 20;
        let mut qc = vec![0; bins];
        for &x in q.iter() {
            qc[((x * bins as f64) as usize).min(bins - 1)] += 1;
        }
        assert!(chi_square_p(&qc, &vec![1.0 / bins as f64; bins]) > 0.01);
        // Equiprobable bins of the standard normal (tails beyond ±6 carry
        // negligible mass).
        let normal = Normal::new(0.0, 1.0).unwrap();
        let edges: Vec<f64> = (1..bins).map(|i| normal.inverse_cdf(i as f64 / bins as f64)).collect();
        let mut pc = vec![0; bins];
        for &v in p.iter() {
            pc[edges.partition_point(|&e| e < v)] += 1;
        }
        assert!(chi_square_p(&pc, &vec![1.0 / bins as f64; bins]) > 0.01);
    }

    #[test]
    fn velocity_mean_matches_mixture() {
        let params = VlasovIcParams::default();
        let (_, p) = sample_vlasov_ic(100_000, &params, 12).unwrap();
        let mean = p.mean();
        let var = p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (p.len() - 1) as f64;
        let se = (var / p.len() as f64).sqrt();
        let expected = params.a * params.v0 / (params.a + 1.0);
        assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected}");
        assert!((expected - 0.923).abs() < 1e-3);
    }

    #[test]
    fn sampling_is_reproducible() {
        let params = VlasovIcParams::default();
        let a = sample_vlasov_ic(500, &params, 5).unwrap();
        let b = sample_vlasov_ic(500, &params, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_vlasov_ic(500, &params, 6).unwrap());
        assert!(a.0.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}
