//! Backward map of gradient covariances across one layer.

use super::basis::solve_gram;
use super::{ChiSet, CovMatrix, ModeSpec};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct GradDecomposition {
    /// Coefficients of `cos θ^(0) .. cos θ^(K−1)`.
    pub eps_tilde: Vec<f64>,
    pub residual: DMatrix<f64>,
}

/// `Σ̃^(ℓ)_{αα'} = (χ_c/N²) Σ_{ββ'} Σ̃^(ℓ+1)_{ββ'} Σ_k c_k cos(2πk((β−β') − (α−α'))/N)`.
///
/// The kernel depends on `β − β'` only through the wrapped-diagonal sums of
/// the input, which reduces the cost to O(N² + N K).
pub fn backprop_cov_map(grad_cov: &CovMatrix, chis: &ChiSet, mode: &ModeSpec) -> Result<CovMatrix> {
    let n = mode.n();
    if grad_cov.n() != n {
        return Err(Error::Shape(format!("size {} does not match N = {n}", grad_cov.n())));
    }
    let g = grad_cov.values();
    let mut diag_sums = vec![0.0; n];
    for b in 0..n {
        for bp in 0..n {
            diag_sums[(b + n - bp) % n] += g[(b, bp)];
        }
    }
    let n2 = (n * n) as f64;
    let row: Vec<f64> = (0..n)
        .map(|e| {
            let mut acc = 0.0;
            for (k, &ck) in mode.weights().iter().enumerate() {
                let mut s = 0.0;
                for (d, &sd) in diag_sums.iter().enumerate() {
                    s += sd * mode.cos_theta(k, d, e);
                }
                acc += ck * s;
            }
            chis.chi_c * acc / n2
        })
        .collect();
    CovMatrix::new(DMatrix::from_fn(n, n, |a, b| row[(a + n - b) % n]))
}

/// Least-squares coordinates in `{cos θ^(k)}_{k<K}` plus the orthogonal
/// residual.
pub fn decompose_gradient(grad_cov: &DMatrix<f64>, mode: &ModeSpec) -> Result<GradDecomposition> {
    let n = mode.n();
    if grad_cov.shape() != (n, n) {
        return Err(Error::Shape(format!("expected {n}x{n}, got {:?}", grad_cov.shape())));
    }
    let basis: Vec<DMatrix<f64>> = (0..mode.k()).map(|k| mode.cos_matrix(k)).collect();
    let gram = DMatrix::from_fn(basis.len(), basis.len(), |i, j| basis[i].dot(&basis[j]));
    let rhs = DVector::from_iterator(basis.len(), basis.iter().map(|b| b.dot(grad_cov)));
    let coef = solve_gram(gram, rhs)?;
    let mut residual = grad_cov.clone();
    for (b, &c) in basis.iter().zip(coef.iter()) {
        residual -= b * c;
    }
    Ok(GradDecomposition {
        eps_tilde: coef.iter().copied().collect(),
        residual,
    })
}

/// `Σ_k χ_c^{L−ℓ} ε̃_k cos θ^(k)`.
pub fn predict_grad_cov(
    dec: &GradDecomposition,
    chis: &ChiSet,
    mode: &ModeSpec,
    from_layer: usize,
    to_layer: usize,
) -> Result<CovMatrix> {
    if to_layer > from_layer {
        return Err(Error::InvalidConfig(format!(
            "target layer {to_layer} lies above source layer {from_layer}"
        )));
    }
    if dec.eps_tilde.len() > mode.k() {
        return Err(Error::Shape(format!(
            "{} coefficients for K = {}",
            dec.eps_tilde.len(),
            mode.k()
        )));
    }
    let g = chis.chi_c.powi((from_layer - to_layer) as i32);
    let n = mode.n();
    let mut out = DMatrix::zeros(n, n);
    for (k, &e) in dec.eps_tilde.iter().enumerate() {
        out += mode.cos_matrix(k) * (g * e);
    }
    CovMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chis() -> ChiSet {
        ChiSet {
            chi_q: 0.9,
            chi_c: 0.85,
            chi_kappa: 0.05,
            chi_total: 0.9,
        }
    }

    /// Literal O(N⁴K) contraction.
    fn brute_force(g: &DMatrix<f64>, chis: &ChiSet, mode: &ModeSpec) -> DMatrix<f64> {
        let n = mode.n();
        let nf = n as f64;
        DMatrix::from_fn(n, n, |a, ap| {
            let mut acc = 0.0;
            for b in 0..n {
                for bp in 0..n {
                    let shift = (b as f64 - bp as f64) - (a as f64 - ap as f64);
                    let kern: f64 = (0..mode.k())
                        .map(|k| {
                            mode.weights()[k] * (2.0 * std::f64::consts::PI * k as f64 * shift / nf).cos()
                        })
                        .sum();
                    acc += g[(b, bp)] * kern;
                }
            }
            chis.chi_c * acc / (nf * nf)
        })
    }

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn matches_brute_force() {
        let mode = ModeSpec::new(8, 3).unwrap();
        let g = random_symmetric(8, 1);
        let fast = backprop_cov_map(&CovMatrix::new(g.clone()).unwrap(), &chis(), &mode).unwrap();
        assert!((fast.values() - brute_force(&g, &chis(), &mode)).amax() < 1e-12);
    }

    #[test]
    fn cosines_are_eigenvectors_or_annihilated() {
        let mode = ModeSpec::new(16, 5).unwrap();
        for k in 0..=8 {
            let c = mode.cos_matrix(k);
            let out = backprop_cov_map(&CovMatrix::new(c.clone()).unwrap(), &chis(), &mode).unwrap();
            let expected = if k < 5 { c * chis().chi_c } else { DMatrix::zeros(16, 16) };
            assert!((out.values() - expected).amax() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn linear_and_zero_preserving() {
        let mode = ModeSpec::new(8, 3).unwrap();
        let a = random_symmetric(8, 2);
        let b = random_symmetric(8, 3);
        let f = |m: &DMatrix<f64>| {
            backprop_cov_map(&CovMatrix::new(m.clone()).unwrap(), &chis(), &mode)
                .unwrap()
                .into_inner()
        };
        let lhs = f(&(&a * 2.0 + &b * -0.5));
        let rhs = f(&a) * 2.0 + f(&b) * -0.5;
        assert!((lhs - rhs).amax() < 1e-12);
        assert!(f(&DMatrix::zeros(8, 8)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn closed_form_matches_iteration() {
        let mode = ModeSpec::new(16, 5).unwrap();
        let dec = GradDecomposition {
            eps_tilde: vec![0.7, -0.2, 1.1, 0.4, -0.9],
            residual: DMatrix::zeros(16, 16),
        };
        let mut cur = predict_grad_cov(&dec, &chis(), &mode, 7, 7).unwrap();
        for _ in 0..3 {
            cur = backprop_cov_map(&cur, &chis(), &mode).unwrap();
        }
        let closed = predict_grad_cov(&dec, &chis(), &mode, 10, 7).unwrap();
        assert!((cur.values() - closed.values()).amax() < 1e-10);

        let one = GradDecomposition {
            eps_tilde: vec![1.0],
            residual: DMatrix::zeros(16, 16),
        };
        let p = predict_grad_cov(&one, &chis(), &mode, 5, 0).unwrap();
        assert!(p.values().iter().all(|&v| (v - chis().chi_c.powi(5)).abs() < 1e-14));
        assert!(predict_grad_cov(&one, &chis(), &mode, 0, 5).is_err());
    }

    #[test]
    fn residual_is_annihilated() {
        let mode = ModeSpec::new(16, 5).unwrap();
        let g = random_symmetric(16, 9);
        let dec = decompose_gradient(&g, &mode).unwrap();
        let recon = predict_grad_cov(&dec, &chis(), &mode, 0, 0).unwrap();
        assert!((recon.values() + &dec.residual - &g).amax() < 1e-10);
        let r = CovMatrix::new((&dec.residual + dec.residual.transpose()) * 0.5).unwrap();
        assert!(backprop_cov_map(&r, &chis(), &mode).unwrap().values().amax() < 1e-12);
    }
}
