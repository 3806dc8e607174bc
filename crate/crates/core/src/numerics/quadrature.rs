//! Gaussian quadrature rules.
//!
//! [`QuadratureRule`] stores a Gauss–Hermite rule in the probabilists'
//! convention: nodes `x_i` and weights `w_i` with `Σ w_i f(x_i) ≈ E[f(z)]`
//! for `z ~ N(0, 1)`, so the weights sum to 1. It also carries the
//! Gauss–Legendre and Gauss–Laguerre rules of the same order that the
//! bivariate expectation uses for its polar-sector integration.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 256;
pub const DEFAULT_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Gauss–Legendre on [-1, 1].
    pub(crate) legendre: (Vec<f64>, Vec<f64>),
    /// Gauss–Laguerre for `∫_0^∞ e^{-s} f(s) ds`.
    pub(crate) laguerre: (Vec<f64>, Vec<f64>),
}

impl QuadratureRule {
    /// `E[f(z)]` for `z ~ N(0, 1)`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `E[f(h)]` for `h ~ N(0, variance)`.
    pub fn expect_with_variance(&self, variance: f64, f: impl Fn(f64) -> f64) -> f64 {
        let s = variance.max(0.0).sqrt();
        self.expect(|z| f(s * z))
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        gauss_hermite_rule(DEFAULT_ORDER).expect("default order is in range")
    }
}

/// Builds the order-`order` rule, exact for polynomials of degree
/// `2·order − 1` against the standard normal.
pub fn gauss_hermite_rule(order: usize) -> Result<QuadratureRule> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::QuadratureOrder(order));
    }
    let (x, w) = hermite_physicists(order);
    let nodes = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    let weights = w.iter().map(|v| v * inv_sqrt_pi).collect();
    Ok(QuadratureRule {
        order,
        nodes,
        weights,
        legendre: legendre(order),
        laguerre: laguerre(order),
    })
}

/// Nodes and weights for the weight e^{-x²}. Golub–Welsch supplies the
/// starting points; Newton on the orthonormal recurrence polishes each node
/// to full precision and yields the weight from the derivative.
fn hermite_physicists(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n - 1 {
        let b = ((i + 1) as f64 / 2.0).sqrt();
        jac[(i, i + 1)] = b;
        jac[(i + 1, i)] = b;
    }
    let mut guesses: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    guesses.sort_by(f64::total_cmp);

    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // polish the non-negative half and mirror it
        let mut z = guesses[n - 1 - i].abs();
        let mut pp = 0.0;
        for _ in 0..50 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[n - 1 - i] = z;
        x[i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Golub–Welsch on the Jacobi matrix of the Laguerre polynomials. The
/// three-term Newton recurrence overflows for large orders, the
/// eigen-decomposition does not.
fn laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = 2.0 * i as f64 + 1.0;
        if i + 1 < n {
            jac[(i, i + 1)] = i as f64 + 1.0;
            jac[(i + 1, i)] = i as f64 + 1.0;
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}
