//! The fully connected background map, its ReLU closed form and the
//! variance fixed point.

use super::Hyperparams;
use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::numerics::{biv_gauss_expect, QuadratureRule};
use std::f64::consts::PI;

const CORRELATION_SLACK: f64 = 1e-12;
pub const Q_TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 10_000;
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
/// Iterations of the bivariate-rule polish after the cheap stage.
const POLISH_ITERATIONS: usize = 200;

/// Variance fixed point with the correlation fixed at `c = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldPoint {
    pub q: f64,
    pub c: f64,
}

impl MeanFieldPoint {
    pub fn new(q: f64, c: f64) -> Result<Self> {
        if !(q.is_finite() && q >= 0.0) {
            return Err(Error::NegativeVariance(q));
        }
        if !valid_correlation(c) {
            return Err(Error::CorrelationOutOfRange(c));
        }
        Ok(MeanFieldPoint { q, c: c.clamp(-1.0, 1.0) })
    }
}

/// False for NaN as well as out-of-range values.
fn valid_correlation(c: f64) -> bool {
    (-1.0 - CORRELATION_SLACK..=1.0 + CORRELATION_SLACK).contains(&c)
}

/// Arc-cosine kernel `J₁(c) = (√(1 − c²) + (π − arccos c) c) / π`.
pub fn relu_j1(c: f64) -> Result<f64> {
    if !valid_correlation(c) {
        return Err(Error::CorrelationOutOfRange(c));
    }
    let c = c.clamp(-1.0, 1.0);
    Ok(((1.0 - c * c).sqrt() + (PI - c.acos()) * c) / PI)
}

/// One step of the background map: `(q, c) ↦ (q′, q′c′)`. ReLU uses the
/// arc-cosine closed form; other activations use quadrature.
pub fn dcn_map(hp: &Hyperparams, q: f64, c: f64, rule: &QuadratureRule) -> Result<(f64, f64)> {
    match hp.activation {
        Activation::Relu => {
            check_qc(q, c)?;
            let j = relu_j1(c)?;
            Ok((
                0.5 * hp.sigma2 * q + hp.sigma_b2,
                0.5 * hp.sigma2 * q * j + hp.sigma_b2,
            ))
        }
        Activation::Tanh => dcn_map_quadrature(hp, q, c, rule),
    }
}

/// The background map evaluated by quadrature for every activation.
pub fn dcn_map_quadrature(
    hp: &Hyperparams,
    q: f64,
    c: f64,
    rule: &QuadratureRule,
) -> Result<(f64, f64)> {
    check_qc(q, c)?;
    let c = c.clamp(-1.0, 1.0);
    let phi = |x| hp.activation.apply(x);
    let var = biv_gauss_expect(phi, phi, q, q, q, rule)?;
    let cov = biv_gauss_expect(phi, phi, q, q, q * c, rule)?;
    Ok((hp.sigma2 * var + hp.sigma_b2, hp.sigma2 * cov + hp.sigma_b2))
}

fn check_qc(q: f64, c: f64) -> Result<()> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(Error::NegativeVariance(q));
    }
    if !valid_correlation(c) {
        return Err(Error::CorrelationOutOfRange(c));
    }
    Ok(())
}

/// `σ² E[φ(√q z)²] + σ_b²` through the one-dimensional Gauss–Hermite rule.
fn variance_step_fast(hp: &Hyperparams, q: f64, rule: &QuadratureRule) -> f64 {
    match hp.activation {
        Activation::Relu => 0.5 * hp.sigma2 * q + hp.sigma_b2,
        act => hp.sigma2 * rule.expect_with_variance(q, |x| act.apply(x).powi(2)) + hp.sigma_b2,
    }
}

/// The same step through the bivariate rule used by the covariance map,
/// so that a converged `q*` is a fixed point of that map to rounding.
fn variance_step_exact(hp: &Hyperparams, q: f64, rule: &QuadratureRule) -> Result<f64> {
    match hp.activation {
        Activation::Relu => Ok(0.5 * hp.sigma2 * q + hp.sigma_b2),
        act => {
            let phi = |x| act.apply(x);
            Ok(hp.sigma2 * biv_gauss_expect(phi, phi, q, q, q, rule)? + hp.sigma_b2)
        }
    }
}

/// Iterates the variance map from `q₀ = 1`.
pub fn solve_q_star(hp: &Hyperparams, rule: &QuadratureRule) -> Result<MeanFieldPoint> {
    solve_q_star_from(hp, 1.0, rule)
}

/// Iterates the variance map from `q0` until `|Δq| ≤ 1e-12`. Hitting the
/// iteration cap returns the last iterate; exceeding `1e12` is divergence.
pub fn solve_q_star_from(hp: &Hyperparams, q0: f64, rule: &QuadratureRule) -> Result<MeanFieldPoint> {
    hp.validate()?;
    if !(q0.is_finite() && q0 >= 0.0) {
        return Err(Error::NegativeVariance(q0));
    }
    let mut q = q0;
    let mut iterations = 0;
    // Cheap one-dimensional rule first, then polish with the bivariate one.
    for (exact, cap) in [(false, MAX_ITERATIONS), (true, POLISH_ITERATIONS)] {
        for _ in 0..cap {
            let next = if exact {
                variance_step_exact(hp, q, rule)?
            } else {
                variance_step_fast(hp, q, rule)
            };
            iterations += 1;
            if !next.is_finite() || next > DIVERGENCE_THRESHOLD {
                return Err(Error::Diverged { q: next, iterations });
            }
            let delta = (next - q).abs();
            q = next;
            if delta <= Q_TOLERANCE {
                break;
            }
        }
    }
    MeanFieldPoint::new(q, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn hp(act: Activation, s: f64, b: f64) -> Hyperparams {
        Hyperparams::new(act, s, b).unwrap()
    }

    #[test]
    fn j1_endpoints() {
        assert!((relu_j1(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((relu_j1(0.0).unwrap() - 1.0 / PI).abs() < 1e-12);
        assert!(relu_j1(-1.0).unwrap().abs() < 1e-12);
        assert!(relu_j1(1.0 + 1e-13).is_ok());
        assert!(relu_j1(1.001).is_err());
    }

    #[test]
    fn relu_variance_examples() {
        let rule = QuadratureRule::default();
        let (q, _) = dcn_map(&hp(Activation::Relu, 2.0, 0.0), 1.0, 1.0, &rule).unwrap();
        assert_eq!(q, 1.0);
        let (q, _) = dcn_map(&hp(Activation::Relu, 1.0, 0.5), 4.0, 0.3, &rule).unwrap();
        assert_eq!(q, 2.5);
    }

    #[test]
    fn tanh_zero_correlation_leaves_bias() {
        let rule = QuadratureRule::default();
        let (_, qc) = dcn_map(&hp(Activation::Tanh, 2.0, 0.1), 1.0, 0.0, &rule).unwrap();
        assert!((qc - 0.1).abs() < 1e-14);
    }

    #[test]
    fn relu_closed_form_matches_quadrature() {
        let rule = QuadratureRule::default();
        let h = hp(Activation::Relu, 1.7, 0.3);
        for i in 0..=40 {
            let c = -1.0 + 0.05 * i as f64;
            let a = dcn_map(&h, 1.3, c, &rule).unwrap();
            let b = dcn_map_quadrature(&h, 1.3, c, &rule).unwrap();
            assert!((a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10, "c = {c}");
        }
    }

    #[test]
    fn relu_fixed_points() {
        let rule = QuadratureRule::default();
        let p = solve_q_star(&hp(Activation::Relu, 1.0, 0.5), &rule).unwrap();
        assert!((p.q - 1.0).abs() < 1e-11);
        let p = solve_q_star(&hp(Activation::Relu, 2.0, 0.0), &rule).unwrap();
        assert_eq!(p.q, 1.0);
        let p = solve_q_star_from(&hp(Activation::Relu, 2.0, 0.0), 3.5, &rule).unwrap();
        assert_eq!(p.q, 3.5);
        assert!(matches!(
            solve_q_star(&hp(Activation::Relu, 3.0, 0.5), &rule),
            Err(Error::Diverged { .. })
        ));
    }

    #[test]
    fn tanh_fixed_point_matches_monte_carlo() {
        let rule = QuadratureRule::default();
        let h = hp(Activation::Tanh, 1.5, 0.1);
        let p = solve_q_star(&h, &rule).unwrap();
        // Monte Carlo fixed point iteration with common random numbers.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut q: f64 = 1.0;
        for _ in 0..60 {
            let m = z.iter().map(|&x| (q.sqrt() * x).tanh().powi(2)).sum::<f64>() / z.len() as f64;
            q = 1.5 * m + 0.1;
        }
        let vals: Vec<f64> = z.iter().map(|&x| 1.5 * (q.sqrt() * x).tanh().powi(2)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        // Standard error of one map evaluation, amplified by 1/(1 − slope)
        // at the fixed point; slope < 1/2 here.
        let se = 2.0 * (var / vals.len() as f64).sqrt();
        assert!((p.q - q).abs() < 3.0 * se, "{} vs {} (se {se})", p.q, q);
    }

    #[test]
    fn tanh_zero_bias_collapses_to_zero() {
        let rule = QuadratureRule::default();
        let p = solve_q_star(&hp(Activation::Tanh, 0.5, 0.0), &rule).unwrap();
        assert!(p.q < 1e-10);
    }
}
