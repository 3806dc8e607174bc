use super::{Hyperparams, MeanFieldPoint, ModeSpec};
use crate::activation::Activation;
use crate::error::Result;
use crate::numerics::{biv_gauss_expect, QuadratureRule};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Linearization constants of the covariance map at `(q*, c*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSet {
    /// `σ² E[φ′(h)² + φ″(h)φ(h)]`: response of a variance to itself.
    pub chi_q: f64,
    /// `σ² E[φ′(h₁)φ′(h₂)]`: response of a covariance to itself.
    pub chi_c: f64,
    /// `(σ²/2) E[φ″(h₁)φ(h₂) + φ(h₁)φ″(h₂)]`: response of a covariance to
    /// one of its variances.
    pub chi_kappa: f64,
    /// Eigenvalue of the ψ direction: `(S/N)χ_q + (1 − S/N)(χ_κ + χ_c)`.
    pub chi_total: f64,
}

/// ReLU uses the closed forms `χ_q = σ²/2`, `χ_c = σ²(π − arccos c)/(2π)`
/// and `χ_κ = 0`; other activations use quadrature.
pub fn chi_set(
    point: &MeanFieldPoint,
    hp: &Hyperparams,
    mode: &ModeSpec,
    rule: &QuadratureRule,
) -> Result<ChiSet> {
    hp.validate()?;
    let (chi_q, chi_c, chi_kappa) = match hp.activation {
        Activation::Relu => {
            let c = point.c.clamp(-1.0, 1.0);
            (0.5 * hp.sigma2, hp.sigma2 * (PI - c.acos()) / (2.0 * PI), 0.0)
        }
        Activation::Tanh => chi_quadrature(point, hp, rule)?,
    };
    let frac = mode.weight_sum() / mode.n() as f64;
    let chi_total = frac * chi_q + (1.0 - frac) * (chi_kappa + chi_c);
    Ok(ChiSet {
        chi_q,
        chi_c,
        chi_kappa,
        chi_total,
    })
}

/// `(χ_q, χ_c, χ_κ)` by bivariate quadrature.
fn chi_quadrature(point: &MeanFieldPoint, hp: &Hyperparams, rule: &QuadratureRule) -> Result<(f64, f64, f64)> {
    let act = hp.activation;
    let phi = |x| act.apply(x);
    let d1 = |x| act.derivative(x);
    let d2 = |x| act.second_derivative(x);
    let (q, qc) = (point.q, point.q * point.c);

    let chi_q = hp.sigma2
        * (biv_gauss_expect(d1, d1, q, q, q, rule)? + biv_gauss_expect(d2, phi, q, q, q, rule)?);
    let chi_c = hp.sigma2 * biv_gauss_expect(d1, d1, q, q, qc, rule)?;
    let chi_kappa = 0.5
        * hp.sigma2
        * (biv_gauss_expect(d2, phi, q, q, qc, rule)? + biv_gauss_expect(phi, d2, q, q, qc, rule)?);
    Ok((chi_q, chi_c, chi_kappa))
}
