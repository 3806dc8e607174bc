use super::{CovMatrix, Hyperparams, ModeSpec};
use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::numerics::{biv_gauss_expect, dft_forward, QuadratureRule};
use nalgebra::DMatrix;
use std::collections::HashMap;

/// `M_{ββ'} = E[φ(H_β)φ(H_β')]` for every ordered pair, reading the pair's
/// covariance from `cov[(β, β')]`. Only each 2×2 block has to be PSD.
///
/// Identical `(var, var, cov)` triples are evaluated once; the key is the
/// exact bit pattern, so cached and uncached results are identical.
pub fn pairwise_expectations(
    cov: &DMatrix<f64>,
    activation: Activation,
    rule: &QuadratureRule,
) -> Result<DMatrix<f64>> {
    let n = square_size(cov)?;
    let phi = |x| activation.apply(x);
    let mut cache: HashMap<(u64, u64, u64), f64> = HashMap::new();
    let mut m = DMatrix::zeros(n, n);
    for b in 0..n {
        for bp in 0..n {
            let (v1, v2, c) = (cov[(b, b)], cov[(bp, bp)], cov[(b, bp)]);
            let key = (v1.to_bits(), v2.to_bits(), c.to_bits());
            let value = match cache.get(&key) {
                Some(&v) => v,
                None => {
                    let v = biv_gauss_expect(phi, phi, v1, v2, c, rule)?;
                    cache.insert(key, v);
                    v
                }
            };
            m[(b, bp)] = value;
        }
    }
    Ok(m)
}

/// `(σ²/N²) Σ_k c_k cos θ^(k)_{αα'} Σ_{ββ'} cos θ^(k)_{ββ'} M_{ββ'} + σ_b²`.
fn contract(m: &DMatrix<f64>, hp: &Hyperparams, mode: &ModeSpec) -> DMatrix<f64> {
    let n = mode.n();
    let n2 = (n * n) as f64;
    let spectrum: Vec<f64> = (0..mode.k())
        .map(|k| {
            let mut acc = 0.0;
            for b in 0..n {
                for bp in 0..n {
                    acc += mode.cos_theta(k, b, bp) * m[(b, bp)];
                }
            }
            mode.weights()[k] * acc / n2
        })
        .collect();
    circulant_from_spectrum(&spectrum, hp.sigma2, hp.sigma_b2, mode)
}

/// `scale · Σ_k spectrum_k cos θ^(k) + offset`, built from its first row so
/// the result is exactly symmetric and circulant.
fn circulant_from_spectrum(spectrum: &[f64], scale: f64, offset: f64, mode: &ModeSpec) -> DMatrix<f64> {
    let n = mode.n();
    let row: Vec<f64> = (0..n)
        .map(|d| {
            let s: f64 = spectrum
                .iter()
                .enumerate()
                .map(|(k, &w)| w * mode.cos_theta(k, d, 0))
                .sum();
            scale * s + offset
        })
        .collect();
    DMatrix::from_fn(n, n, |a, b| row[(a + n - b) % n])
}

/// The covariance map without the global PSD check. Each ordered pair reads
/// its own entry, so asymmetric perturbations (as in finite differencing)
/// are allowed.
pub fn fno_c_map_pairwise(
    cov: &DMatrix<f64>,
    hp: &Hyperparams,
    mode: &ModeSpec,
    rule: &QuadratureRule,
) -> Result<DMatrix<f64>> {
    hp.validate()?;
    check_size(square_size(cov)?, mode)?;
    let m = pairwise_expectations(cov, hp.activation, rule)?;
    Ok(contract(&m, hp, mode))
}

/// One layer of the covariance map.
pub fn fno_c_map(
    cov: &CovMatrix,
    hp: &Hyperparams,
    mode: &ModeSpec,
    rule: &QuadratureRule,
) -> Result<CovMatrix> {
    cov.ensure_psd()?;
    CovMatrix::new(fno_c_map_pairwise(cov.values(), hp, mode, rule)?)
}

/// `layers` successive applications; the returned vector starts with the
/// first image of `cov`.
pub fn iterate_c_map(
    cov: &CovMatrix,
    hp: &Hyperparams,
    mode: &ModeSpec,
    rule: &QuadratureRule,
    layers: usize,
) -> Result<Vec<CovMatrix>> {
    let mut out = Vec::with_capacity(layers);
    let mut cur = cov.clone();
    for _ in 0..layers {
        cur = fno_c_map(&cur, hp, mode, rule)?;
        out.push(cur.clone());
    }
    Ok(out)
}

/// First-layer covariance for a fixed N×D input:
/// `σ² Σ_k c_k ⟨|x̂_k|²⟩ cos θ^(k) + σ_b²`, with ⟨·⟩ the feature average.
pub fn initial_covariance_from_input(
    input: &DMatrix<f64>,
    hp: &Hyperparams,
    mode: &ModeSpec,
) -> Result<CovMatrix> {
    hp.validate()?;
    check_size(input.nrows(), mode)?;
    let d = input.ncols();
    if d == 0 {
        return Err(Error::Shape("input has no feature columns".into()));
    }
    let mut power = vec![0.0; mode.k()];
    for col in input.column_iter() {
        let column: Vec<f64> = col.iter().copied().collect();
        let spec = dft_forward(&column)?;
        for (p, s) in power.iter_mut().zip(&spec) {
            *p += s.norm_sqr();
        }
    }
    let spectrum: Vec<f64> = power
        .iter()
        .zip(mode.weights())
        .map(|(p, c)| c * p / d as f64)
        .collect();
    CovMatrix::new(circulant_from_spectrum(&spectrum, hp.sigma2, hp.sigma_b2, mode))
}

/// Largest deviation between the diagonal of the full-mode covariance map
/// and the filter-size-N convolutional map `(σ²/N) Σ_β E[φ(H_β)²] + σ_b²`.
pub fn diag_global_cnn_check(
    cov: &CovMatrix,
    hp: &Hyperparams,
    mode: &ModeSpec,
    rule: &QuadratureRule,
) -> Result<f64> {
    if !mode.is_full() {
        return Err(Error::InvalidConfig(format!(
            "diagonal identity needs full mode (K = {}), got K = {}",
            mode.n() / 2 + 1,
            mode.k()
        )));
    }
    let mapped = fno_c_map(cov, hp, mode, rule)?;
    let n = mode.n();
    let phi = |x| hp.activation.apply(x);
    let mut mean_sq = 0.0;
    for b in 0..n {
        let v = cov.values()[(b, b)];
        mean_sq += biv_gauss_expect(phi, phi, v, v, v, rule)?;
    }
    let cnn = hp.sigma2 * mean_sq / n as f64 + hp.sigma_b2;
    Ok((0..n)
        .map(|a| (mapped.values()[(a, a)] - cnn).abs())
        .fold(0.0, f64::max))
}

fn square_size(m: &DMatrix<f64>) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::Shape(format!("expected square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(m.nrows())
}

fn check_size(n: usize, mode: &ModeSpec) -> Result<()> {
    if n != mode.n() {
        return Err(Error::Shape(format!("size {n} does not match N = {}", mode.n())));
    }
    Ok(())
}
