//! Eigenbases of the covariance-map Jacobian at `Σ* = q*·11ᵀ`, its dense
//! closed form and the projection of deviations onto the eigenbases.

use super::{ChiSet, ModeSpec};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// The Jacobian is stored densely as N²×N².
pub const MAX_JACOBIAN_N: usize = 32;
const PINV_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasisSet {
    /// Eigenvalue `χ_total`.
    pub psi: DMatrix<f64>,
    /// `ψ^(1) .. ψ^(K−1)`, eigenvalue `χ_c`.
    pub psi_k: Vec<DMatrix<f64>>,
}

impl EigenBasisSet {
    /// `ψ` followed by the `ψ^(k)`.
    pub fn all(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        std::iter::once(&self.psi).chain(self.psi_k.iter())
    }

    pub fn len(&self) -> usize {
        1 + self.psi_k.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frobenius Gram matrix of the bases in [`EigenBasisSet::all`] order.
    pub fn gram(&self) -> DMatrix<f64> {
        let b: Vec<&DMatrix<f64>> = self.all().collect();
        DMatrix::from_fn(b.len(), b.len(), |i, j| b[i].dot(b[j]))
    }
}

pub fn build_eigenbases(chis: &ChiSet, mode: &ModeSpec) -> Result<EigenBasisSet> {
    let n = mode.n();
    if mode.is_full() {
        let eye = DMatrix::<f64>::identity(n, n);
        return Ok(EigenBasisSet {
            psi: DMatrix::from_element(n, n, 1.0),
            psi_k: (1..mode.k()).map(|k| mode.cos_matrix(k) - &eye).collect(),
        });
    }
    let scale = chis.chi_q.abs().max(chis.chi_c.abs());
    if chis.chi_kappa == 0.0 || chis.chi_kappa.abs() <= 1e-14 * scale {
        return Err(Error::Degenerate(format!(
            "chi_kappa = {:e} leaves psi undefined below full mode",
            chis.chi_kappa
        )));
    }
    let weighted = mode.weighted_cos_sum();
    let ratio = (chis.chi_kappa + chis.chi_c - chis.chi_q) / chis.chi_kappa;
    let psi = DMatrix::from_element(n, n, 1.0) - &weighted * (ratio / n as f64);
    let mean = &weighted / mode.weight_sum();
    let psi_k = (1..mode.k()).map(|k| mode.cos_matrix(k) - &mean).collect();
    Ok(EigenBasisSet { psi, psi_k })
}

/// Dense Jacobian of the covariance map at the fixed point, indexed by
/// row-major vectorization `(α, α') ↦ αN + α'`.
pub fn build_jacobian(chis: &ChiSet, mode: &ModeSpec) -> Result<DMatrix<f64>> {
    let n = mode.n();
    if n > MAX_JACOBIAN_N {
        return Err(Error::TooLarge { n, max: MAX_JACOBIAN_N });
    }
    let nn = n * n;
    let n2 = nn as f64;
    let mut j = DMatrix::zeros(nn, nn);
    for (k, &ck) in mode.weights().iter().enumerate() {
        let diag = chis.chi_q - chis.chi_kappa + if k == 0 { n as f64 * chis.chi_kappa } else { 0.0 };
        let u = DVector::from_fn(nn, |i, _| mode.cos_theta(k, i / n, i % n));
        let w = DVector::from_fn(nn, |i, _| {
            let (b, bp) = (i / n, i % n);
            let g = if b == bp { diag } else { chis.chi_c };
            mode.cos_theta(k, b, bp) * g
        });
        j.ger(ck / n2, &u, &w, 1.0);
    }
    Ok(j)
}

/// Row-major vectorization matching [`build_jacobian`].
pub fn vectorize(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.transpose().iter().copied())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationDecomposition {
    pub eps: f64,
    pub eps_k: Vec<f64>,
    pub residual: DMatrix<f64>,
}

/// Least-squares coordinates of `e` in the (non-orthogonal) eigenbases.
pub fn decompose_deviation(e: &DMatrix<f64>, bases: &EigenBasisSet) -> Result<DeviationDecomposition> {
    if e.shape() != bases.psi.shape() {
        return Err(Error::Shape(format!(
            "deviation is {:?}, bases are {:?}",
            e.shape(),
            bases.psi.shape()
        )));
    }
    let rhs = DVector::from_iterator(bases.len(), bases.all().map(|b| b.dot(e)));
    let coef = solve_gram(bases.gram(), rhs)?;
    let mut recon = DMatrix::zeros(e.nrows(), e.ncols());
    for (b, &c) in bases.all().zip(coef.iter()) {
        recon += b * c;
    }
    Ok(DeviationDecomposition {
        eps: coef[0],
        eps_k: coef.iter().skip(1).copied().collect(),
        residual: e - recon,
    })
}

/// Solves the normal equations, falling back to the pseudo-inverse when the
/// Gram matrix is badly conditioned.
pub(crate) fn solve_gram(gram: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let svd = gram.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax.is_finite() && smax > 0.0) {
        return Err(Error::SingularGram);
    }
    if smin * PINV_CONDITION < smax {
        return svd
            .solve(&rhs, smax / PINV_CONDITION)
            .map_err(|_| Error::SingularGram);
    }
    gram.cholesky().map(|c| c.solve(&rhs)).ok_or(Error::SingularGram)
}

/// `χ_total^ℓ ε ψ + Σ_k χ_c^ℓ ε_k ψ^(k)`; the residual is dropped.
pub fn predict_deviation(
    dec: &DeviationDecomposition,
    bases: &EigenBasisSet,
    chis: &ChiSet,
    layers: usize,
) -> DMatrix<f64> {
    let l = layers as i32;
    let mut out = &bases.psi * (chis.chi_total.powi(l) * dec.eps);
    let gc = chis.chi_c.powi(l);
    for (b, &e) in bases.psi_k.iter().zip(&dec.eps_k) {
        out += b * (gc * e);
    }
    out
}
