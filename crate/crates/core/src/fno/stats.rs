use super::{ForwardTrace, GradientTrace};
use crate::error::Result;
use crate::meanfield::CovMatrix;

/// `(1/D) Σ_d H_{:,d} H_{:,d}ᵀ` at layer `layer` (1-based).
pub fn empirical_cov(trace: &ForwardTrace, layer: usize) -> Result<CovMatrix> {
    let h = trace.pre_layer(layer)?;
    let d = h.ncols().max(1) as f64;
    let m = h * h.transpose() / d;
    CovMatrix::new((&m + m.transpose()) * 0.5)
}

/// `(1/D) Σ_{α,d} (∂L/∂H^(ℓ)_{α,d})²`.
pub fn empirical_grad_norm(gtrace: &GradientTrace, layer: usize) -> Result<f64> {
    let g = gtrace.grad_pre_layer(layer)?;
    Ok(g.norm_squared() / g.ncols().max(1) as f64)
}
