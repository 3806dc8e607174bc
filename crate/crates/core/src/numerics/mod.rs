//! Deterministic numerical primitives: power-of-two DFTs, Gauss–Hermite
//! quadrature, bivariate Gaussian expectations and keyed Gaussian sampling.

pub mod dft;
pub mod gaussian;
pub mod quadrature;
pub mod rng;

pub use dft::{dft_forward, dft_inverse};
pub use gaussian::biv_gauss_expect;
pub use quadrature::{gauss_hermite_rule, QuadratureRule};
pub use rng::{RngStream, StreamKey, StreamTag};
