use super::{FnoConfig, FnoParams, WeightSource};
use crate::error::{Error, Result};
use crate::numerics::{RngStream, StreamTag};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Truncated real DFT analysis and synthesis matrices for one config.
#[derive(Debug, Clone)]
pub(crate) struct SpectralBasis {
    /// `cos(2πkn/N)/N`, K×N: `A = cm X`.
    pub cm: DMatrix<f64>,
    /// `sin(2πkn/N)/N`, K×N: `B = −sm X`.
    pub sm: DMatrix<f64>,
    /// `s_k cos(2πkα/N)`, N×K, with `s_k = √(2c_k)`.
    pub cs: DMatrix<f64>,
    /// `s_k sin(2πkα/N)`, N×K.
    pub ss: DMatrix<f64>,
}

/// `cos` and `sin` of `2πj/N` with exact zeros and units at quarter turns.
fn trig_tables(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for j in 0..n {
        let (sin, cos) = (2.0 * PI * j as f64 / n as f64).sin_cos();
        let (sin, cos) = if (4 * j) % n == 0 {
            match 4 * j / n {
                0 => (0.0, 1.0),
                1 => (1.0, 0.0),
                2 => (0.0, -1.0),
                _ => (-1.0, 0.0),
            }
        } else {
            (sin, cos)
        };
        c.push(cos);
        s.push(sin);
    }
    (c, s)
}

impl SpectralBasis {
    pub fn new(config: &FnoConfig) -> Self {
        let (n, k) = (config.n, config.modes);
        let (ct, st) = trig_tables(n);
        let idx = |k: usize, a: usize| (k * a) % n;
        let nf = n as f64;
        let scale: Vec<f64> = (0..k)
            .map(|s| {
                let c = 2.0 - f64::from(s == 0) - f64::from(s == n / 2);
                (2.0 * c).sqrt()
            })
            .collect();
        SpectralBasis {
            cm: DMatrix::from_fn(k, n, |s, a| ct[idx(s, a)] / nf),
            sm: DMatrix::from_fn(k, n, |s, a| st[idx(s, a)] / nf),
            cs: DMatrix::from_fn(n, k, |a, s| scale[s] * ct[idx(s, a)]),
            ss: DMatrix::from_fn(n, k, |a, s| scale[s] * st[idx(s, a)]),
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pre- and post-activations of one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `pre[ℓ − 1] = H^(ℓ)` for `ℓ = 1..=L`.
    pub pre: Vec<DMatrix<f64>>,
    /// `post[ℓ] = X^(ℓ)` for `ℓ = 0..=L`; `post[0]` is the input.
    pub post: Vec<DMatrix<f64>>,
}

impl ForwardTrace {
    pub fn depth(&self) -> usize {
        self.pre.len()
    }

    /// `H^(ℓ)`, 1-based.
    pub fn pre_layer(&self, layer: usize) -> Result<&DMatrix<f64>> {
        if layer == 0 || layer > self.pre.len() {
            return Err(Error::LayerOutOfRange {
                layer,
                depth: self.pre.len(),
            });
        }
        Ok(&self.pre[layer - 1])
    }

    pub fn output(&self) -> &DMatrix<f64> {
        self.post.last().expect("trace always holds the input")
    }
}

pub fn forward(params: &FnoParams, config: &FnoConfig, input: &DMatrix<f64>) -> Result<ForwardTrace> {
    params.check_shapes(config)?;
    forward_with(params, config, input)
}

/// Forward pass over any weight source. Stored and streamed sources with
/// the same weights give bitwise-identical traces.
pub fn forward_with(src: &dyn WeightSource, config: &FnoConfig, input: &DMatrix<f64>) -> Result<ForwardTrace> {
    config.validate()?;
    check_input(config, input)?;
    let basis = SpectralBasis::new(config);
    let mut pre = Vec::with_capacity(config.depth);
    let mut post = Vec::with_capacity(config.depth + 1);
    post.push(input.clone());
    for l in 1..=config.depth {
        let h = layer_forward(src, config, &basis, l, &post[l - 1])?;
        post.push(h.map(|v| config.activation.apply(v)));
        pre.push(h);
    }
    Ok(ForwardTrace { pre, post })
}

pub(crate) fn check_input(config: &FnoConfig, input: &DMatrix<f64>) -> Result<()> {
    if input.shape() != (config.n, config.width) {
        return Err(Error::Shape(format!(
            "input is {:?}, expected ({}, {})",
            input.shape(),
            config.n,
            config.width
        )));
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("input contains non-finite values".into()));
    }
    Ok(())
}

fn layer_forward(
    src: &dyn WeightSource,
    config: &FnoConfig,
    basis: &SpectralBasis,
    l: usize,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (n, d, kk) = (config.n, config.width, config.modes);
    // Feature-major copies so every mode coefficient row is contiguous.
    let at = (&basis.cm * x).transpose();
    let bt = -(&basis.sm * x).transpose();
    let mut p = DMatrix::zeros(kk, d);
    let mut q = DMatrix::zeros(kk, d);
    for k in 0..kk {
        let (ak, bk) = (at.column(k), bt.column(k));
        let (ak, bk) = (ak.as_slice(), bk.as_slice());
        let active = config.xi_active(k);
        src.for_each_mode_column(l, k, &mut |j, theta, xi| {
            let mut pj = dot(ak, theta);
            let mut qj = dot(bk, theta);
            if let (true, Some(xi)) = (active, xi) {
                pj -= dot(bk, xi);
                qj += dot(ak, xi);
            }
            p[(k, j)] = pj;
            q[(k, j)] = qj;
        })?;
    }
    let mut h = &basis.cs * &p - &basis.ss * &q;
    if config.variant == super::Variant::Original {
        let xt = x.transpose();
        let mut seen = 0;
        src.for_each_dense_column(l, &mut |j, w| {
            seen += 1;
            for a in 0..n {
                h[(a, j)] += dot(xt.column(a).as_slice(), w);
            }
        })?;
        if seen != d {
            return Err(Error::Shape(format!("layer {l} has no dense module")));
        }
    }
    let bias = src.bias(l)?;
    if bias.len() != d {
        return Err(Error::Shape(format!("bias of layer {l} has length {}", bias.len())));
    }
    for (j, &b) in bias.iter().enumerate() {
        h.column_mut(j).add_scalar_mut(b);
    }
    Ok(h)
}

/// Mean of absolute values over all entries.
pub fn loss_abs_mean(output: &DMatrix<f64>) -> f64 {
    if output.is_empty() {
        return 0.0;
    }
    output.iter().map(|v| v.abs()).sum::<f64>() / output.len() as f64
}

/// Gradient of [`loss_abs_mean`], with `sign(0) = 0`.
pub fn loss_abs_mean_grad(output: &DMatrix<f64>) -> DMatrix<f64> {
    let scale = 1.0 / output.len().max(1) as f64;
    output.map(|v| {
        if v > 0.0 {
            scale
        } else if v < 0.0 {
            -scale
        } else {
            0.0
        }
    })
}

/// A standard-normal N×D field from the input stream of `replica`.
pub fn standard_normal_input(n: usize, d: usize, root_seed: u64, replica: usize) -> Result<DMatrix<f64>> {
    let v = RngStream::new(root_seed, StreamTag::Input, 0, 0, replica).sample_normal(1.0, n * d)?;
    Ok(DMatrix::from_vec(n, d, v))
}
