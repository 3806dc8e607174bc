use crate::error::{Error, Result};
use nalgebra::DMatrix;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Symmetric N×N covariance over spatial positions.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    values: DMatrix<f64>,
}

impl CovMatrix {
    /// Wraps a square symmetric matrix. Positive semidefiniteness is not
    /// required here (gradient-covariance decompositions produce indefinite
    /// pieces); see [`CovMatrix::ensure_psd`].
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::Shape(format!(
                "covariance must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let scale = values.amax().max(1.0);
        let asym = (&values - values.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::Shape(format!("covariance not symmetric (max |A − Aᵀ| = {asym:.3e})")));
        }
        Ok(CovMatrix { values })
    }

    /// `q·11ᵀ`, the c* = 1 fixed point.
    pub fn constant(n: usize, q: f64) -> Self {
        CovMatrix {
            values: DMatrix::from_element(n, n, q),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.values
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn ensure_psd(&self) -> Result<()> {
        let scale = self.values.amax().max(1.0);
        let min = self.min_eigenvalue();
        if min < -PSD_TOL * scale {
            return Err(Error::Indefinite(format!("minimum eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Correlation matrix `Σ_{ββ'}/√(Σ_ββ Σ_β'β')`; zero-variance rows map to 0.
    pub fn correlation(&self) -> DMatrix<f64> {
        let n = self.n();
        let d: Vec<f64> = (0..n).map(|i| self.values[(i, i)].max(0.0).sqrt()).collect();
        DMatrix::from_fn(n, n, |a, b| {
            let s = d[a] * d[b];
            if s > 0.0 {
                self.values[(a, b)] / s
            } else {
                0.0
            }
        })
    }

    /// `‖self − reference‖_F / ‖reference‖_F`.
    pub fn relative_frobenius_error(&self, reference: &CovMatrix) -> f64 {
        relative_frobenius(&self.values, &reference.values)
    }
}

pub fn relative_frobenius(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let denom = reference.norm();
    let num = (a - reference).norm();
    if denom == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / denom
    }
}
