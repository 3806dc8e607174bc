//! Expectations over a bivariate zero-mean Gaussian.
//!
//! The pair is parameterized through the Cholesky factor of its covariance,
//! `h₁ = l₁₁ z₁`, `h₂ = l₂₁ z₁ + l₂₂ z₂`, and the standard normal plane is
//! integrated in polar coordinates `(z₁, z₂) = r (cos t, sin t)`. The
//! angular range is cut at every direction where `h₁ = 0` or `h₂ = 0`, so
//! integrands with a kink or jump at the origin of either argument (ReLU and
//! its derivative) are smooth inside each sector. Each sector uses
//! Gauss–Legendre in `t`; the radial integral `∫ r e^{-r²/2} F(r) dr` uses
//! Gauss–Laguerre in `s = r²/2`. For ReLU-type integrands the rule is exact
//! up to rounding; for tanh it converges much faster than a tensor-product
//! Gauss–Hermite grid.

use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use std::f64::consts::PI;

const PSD_TOL: f64 = 1e-12;
const UNIT_CORRELATION_TOL: f64 = 1e-12;

/// Validates that `[[var1, cov], [cov, var2]]` is PSD within tolerance.
pub fn check_psd_2x2(var1: f64, var2: f64, cov: f64) -> Result<()> {
    let scale = var1.abs().max(var2.abs()).max(1.0);
    if !(var1.is_finite() && var2.is_finite() && cov.is_finite()) {
        return Err(Error::Indefinite(format!(
            "non-finite entries ({var1}, {var2}, {cov})"
        )));
    }
    if var1 < -PSD_TOL * scale || var2 < -PSD_TOL * scale {
        return Err(Error::Indefinite(format!(
            "negative variance ({var1}, {var2})"
        )));
    }
    let det = var1 * var2 - cov * cov;
    if det < -PSD_TOL * scale * scale {
        return Err(Error::Indefinite(format!(
            "det = {det:.3e} for variances ({var1}, {var2}) and covariance {cov}"
        )));
    }
    Ok(())
}

/// `E[f(h₁) g(h₂)]` for `(h₁, h₂)` zero-mean Gaussian with the given
/// variances and covariance.
pub fn biv_gauss_expect<F, G>(
    f: F,
    g: G,
    var1: f64,
    var2: f64,
    cov: f64,
    rule: &QuadratureRule,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    check_psd_2x2(var1, var2, cov)?;
    let (v1, v2) = (var1.max(0.0), var2.max(0.0));
    if v1 == 0.0 && v2 == 0.0 {
        return Ok(f(0.0) * g(0.0));
    }
    if v1 == 0.0 {
        let f0 = f(0.0);
        return Ok(f0 * rule.expect_with_variance(v2, g));
    }
    if v2 == 0.0 {
        let g0 = g(0.0);
        return Ok(g0 * rule.expect_with_variance(v1, f));
    }
    let l11 = v1.sqrt();
    let rho = cov / (v1 * v2).sqrt();
    if rho.abs() >= 1.0 - UNIT_CORRELATION_TOL {
        // h₂ = ±√(v₂/v₁) h₁: a one-dimensional expectation.
        let ratio = rho.signum() * (v2 / v1).sqrt();
        return Ok(polar_expect(&f, &g, l11, ratio * l11, 0.0, rule));
    }
    let l21 = cov / l11;
    let l22 = (v2 - l21 * l21).max(0.0).sqrt();
    Ok(polar_expect(&f, &g, l11, l21, l22, rule))
}

fn polar_expect<F, G>(f: &F, g: &G, l11: f64, l21: f64, l22: f64, rule: &QuadratureRule) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let two_pi = 2.0 * PI;
    let mut cuts = vec![0.5 * PI, 1.5 * PI];
    let tv = (-l21).atan2(l22).rem_euclid(PI);
    cuts.push(tv);
    cuts.push(tv + PI);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let (lx, lw) = &rule.legendre;
    let (sx, sw) = &rule.laguerre;
    let radii: Vec<f64> = sx.iter().map(|s| (2.0 * s).sqrt()).collect();

    let mut total = 0.0;
    for (i, &a) in cuts.iter().enumerate() {
        let b = if i + 1 < cuts.len() {
            cuts[i + 1]
        } else {
            cuts[0] + two_pi
        };
        let half = 0.5 * (b - a);
        if half <= 0.0 {
            continue;
        }
        let mid = 0.5 * (a + b);
        let mut sector = 0.0;
        for (&x, &w) in lx.iter().zip(lw) {
            let t = mid + half * x;
            let (st, ct) = t.sin_cos();
            let u = l11 * ct;
            let v = l21 * ct + l22 * st;
            let radial: f64 = radii
                .iter()
                .zip(sw)
                .map(|(&r, &wr)| wr * f(r * u) * g(r * v))
                .sum();
            sector += w * radial;
        }
        total += half * sector;
    }
    total / two_pi
}
