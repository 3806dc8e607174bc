//! Mean-field theory of the random FNO: the covariance map over spatial
//! positions, its c* = 1 fixed point, the linearization constants, the
//! Jacobian eigenbases and the backward map of gradient covariances.

mod backprop;
mod basis;
mod chi;
mod cmap;
mod cov;
mod dcn;
mod edge;
mod mode;

pub use backprop::{backprop_cov_map, decompose_gradient, predict_grad_cov, GradDecomposition};
pub use basis::{
    build_eigenbases, build_jacobian, decompose_deviation, predict_deviation, vectorize, DeviationDecomposition,
    EigenBasisSet, MAX_JACOBIAN_N,
};
pub use chi::{chi_set, ChiSet};
pub use cmap::{
    diag_global_cnn_check, fno_c_map, fno_c_map_pairwise, initial_covariance_from_input, iterate_c_map,
    pairwise_expectations,
};
pub use cov::{relative_frobenius, CovMatrix};
pub use dcn::{dcn_map, dcn_map_quadrature, relu_j1, solve_q_star, solve_q_star_from, MeanFieldPoint};
pub use edge::{chi_c_at, find_edge_sigma2, EDGE_TOLERANCE};
pub use mode::ModeSpec;

use crate::activation::Activation;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Activation and initialization variances shared by every map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub activation: Activation,
    pub sigma2: f64,
    pub sigma_b2: f64,
}

impl Hyperparams {
    pub fn new(activation: Activation, sigma2: f64, sigma_b2: f64) -> Result<Self> {
        let hp = Hyperparams {
            activation,
            sigma2,
            sigma_b2,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(Error::InvalidConfig(format!("sigma2 must be > 0, got {}", self.sigma2)));
        }
        if !(self.sigma_b2.is_finite() && self.sigma_b2 >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma_b2 must be >= 0, got {}",
                self.sigma_b2
            )));
        }
        Ok(())
    }
}
