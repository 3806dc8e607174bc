//! Random simplified and original 1D Fourier neural operators: weight
//! sampling, forward pass, hand-written adjoint and feature-averaged
//! statistics.
//!
//! Each layer maps `X ∈ R^{N×D}` to
//! `H_{α,j} = Σ_{k<K} s_k (cos(2πkα/N) P_{kj} − sin(2πkα/N) Q_{kj}) + b_j`
//! with `P + iQ = X̂_k (Θ_k + iΞ_k)`, `X̂_k` the k-th DFT row (scaled by
//! 1/N), `s_k = √(2c_k)`, plus `(X W)_{α,j}` for the original variant.

mod backward;
mod config;
mod forward;
mod params;
mod stats;

pub use backward::{backward, backward_from_pre, GradientTrace};
pub use config::{FnoConfig, InitConfig, InitScheme, InitVariances, Variant};
pub use forward::{forward, forward_with, loss_abs_mean, loss_abs_mean_grad, standard_normal_input, ForwardTrace};
pub use params::{
    init_params, init_params_replica, materialize, FnoParams, LayerParams, ModeColumnFn, StreamedParams,
    WeightSource,
};
pub use stats::{empirical_cov, empirical_grad_norm};
