//! Edge of chaos: the root of `χ_c(σ²) = 1` at the c* = 1 fixed point.

use super::{solve_q_star, Hyperparams};
use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::numerics::{biv_gauss_expect, QuadratureRule};

pub const EDGE_TOLERANCE: f64 = 1e-6;

/// `χ_c` at the fixed point of `hp`. For positively homogeneous activations
/// `χ_c` does not depend on `q`, so a diverging variance map is evaluated
/// at `q = 1`.
pub fn chi_c_at(hp: &Hyperparams, rule: &QuadratureRule) -> Result<f64> {
    let q = match solve_q_star(hp, rule) {
        Ok(p) => p.q,
        Err(Error::Diverged { .. }) if hp.activation.is_positively_homogeneous() => 1.0,
        Err(e) => return Err(e),
    };
    let d1 = |x| hp.activation.derivative(x);
    Ok(hp.sigma2 * biv_gauss_expect(d1, d1, q, q, q, rule)?)
}

/// Bisection on `σ²` until the bracket is narrower than [`EDGE_TOLERANCE`].
pub fn find_edge_sigma2(
    sigma_b2: f64,
    activation: Activation,
    bracket: (f64, f64),
    rule: &QuadratureRule,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!("bad bracket ({lo}, {hi})")));
    }
    let f = |s: f64| -> Result<f64> { Ok(chi_c_at(&Hyperparams::new(activation, s, sigma_b2)?, rule)? - 1.0) };
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    while hi - lo > EDGE_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
