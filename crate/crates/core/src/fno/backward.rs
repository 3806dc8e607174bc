use super::forward::{check_input, SpectralBasis};
use super::{FnoConfig, FnoParams, ForwardTrace};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Reverse-mode derivatives of a scalar loss.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTrace {
    /// `grad_pre[ℓ − 1] = ∂L/∂H^(ℓ)`.
    pub grad_pre: Vec<DMatrix<f64>>,
    /// `∂L/∂X^(0)`.
    pub grad_input: DMatrix<f64>,
    /// Weight gradients in the layout of the parameters (`grad_theta`,
    /// `grad_xi`, `grad_bias`, `grad_dense`). Pinned `Ξ` entries get 0.
    pub params: FnoParams,
}

impl GradientTrace {
    pub fn depth(&self) -> usize {
        self.grad_pre.len()
    }

    pub fn grad_pre_layer(&self, layer: usize) -> Result<&DMatrix<f64>> {
        if layer == 0 || layer > self.grad_pre.len() {
            return Err(Error::LayerOutOfRange {
                layer,
                depth: self.grad_pre.len(),
            });
        }
        Ok(&self.grad_pre[layer - 1])
    }
}

/// Adjoint of [`super::forward`] given `∂L/∂X^(L)`.
pub fn backward(
    params: &FnoParams,
    config: &FnoConfig,
    trace: &ForwardTrace,
    grad_output: &DMatrix<f64>,
) -> Result<GradientTrace> {
    backward_impl(params, config, trace, grad_output, true)
}

/// Adjoint given `∂L/∂H^(L)`, for losses on the last pre-activation.
pub fn backward_from_pre(
    params: &FnoParams,
    config: &FnoConfig,
    trace: &ForwardTrace,
    grad_last_pre: &DMatrix<f64>,
) -> Result<GradientTrace> {
    backward_impl(params, config, trace, grad_last_pre, false)
}

fn backward_impl(
    params: &FnoParams,
    config: &FnoConfig,
    trace: &ForwardTrace,
    grad_output: &DMatrix<f64>,
    gate_output: bool,
) -> Result<GradientTrace> {
    params.check_shapes(config)?;
    let depth = config.depth;
    if trace.pre.len() != depth || trace.post.len() != depth + 1 {
        return Err(Error::Shape(format!(
            "trace has {} layers, config has {depth}",
            trace.pre.len()
        )));
    }
    check_input(config, &trace.post[0])?;
    if grad_output.shape() != (config.n, config.width) {
        return Err(Error::Shape(format!(
            "output gradient is {:?}, expected ({}, {})",
            grad_output.shape(),
            config.n,
            config.width
        )));
    }
    let act = config.activation;
    let basis = SpectralBasis::new(config);
    let mut grads = FnoParams::zeros(config);
    let mut grad_pre = vec![DMatrix::zeros(0, 0); depth];
    let mut g = if gate_output {
        grad_output.component_mul(&trace.pre[depth - 1].map(|v| act.derivative(v)))
    } else {
        grad_output.clone()
    };
    let mut grad_input = DMatrix::zeros(0, 0);
    for l in (1..=depth).rev() {
        let gx = layer_backward(params, config, &basis, l, &trace.post[l - 1], &g, &mut grads)?;
        let next = if l > 1 {
            gx.component_mul(&trace.pre[l - 2].map(|v| act.derivative(v)))
        } else {
            grad_input = gx;
            DMatrix::zeros(0, 0)
        };
        grad_pre[l - 1] = std::mem::replace(&mut g, next);
    }
    Ok(GradientTrace {
        grad_pre,
        grad_input,
        params: grads,
    })
}

/// Accumulates the weight gradients of layer `l` into `grads` and returns
/// `∂L/∂X^(l−1)`.
fn layer_backward(
    params: &FnoParams,
    config: &FnoConfig,
    basis: &SpectralBasis,
    l: usize,
    x: &DMatrix<f64>,
    g: &DMatrix<f64>,
    grads: &mut FnoParams,
) -> Result<DMatrix<f64>> {
    let (d, kk) = (config.width, config.modes);
    let layer = &params.layers[l - 1];
    let out = &mut grads.layers[l - 1];

    let gp = basis.cs.transpose() * g;
    let gq = -(basis.ss.transpose() * g);
    out.bias = DVector::from_iterator(d, g.column_iter().map(|c| c.sum()));

    let a = &basis.cm * x;
    let b = -(&basis.sm * x);
    let mut ga = DMatrix::zeros(kk, d);
    let mut gb = DMatrix::zeros(kk, d);
    for k in 0..kk {
        let (ak, bk) = (a.row(k).transpose(), b.row(k).transpose());
        let (gpk, gqk) = (gp.row(k).transpose(), gq.row(k).transpose());
        let theta = &layer.theta[k];
        out.theta[k] = &ak * gpk.transpose() + &bk * gqk.transpose();
        let mut gak = theta * &gpk;
        let mut gbk = theta * &gqk;
        if config.xi_active(k) {
            let xi = &layer.xi[k];
            out.xi[k] = &ak * gqk.transpose() - &bk * gpk.transpose();
            gak += xi * &gqk;
            gbk -= xi * &gpk;
        }
        ga.row_mut(k).copy_from(&gak.transpose());
        gb.row_mut(k).copy_from(&gbk.transpose());
    }
    let mut gx = basis.cm.transpose() * ga - basis.sm.transpose() * gb;
    if let Some(w) = &layer.dense {
        out.dense = Some(x.transpose() * g);
        gx += g * w.transpose();
    }
    Ok(gx)
}
