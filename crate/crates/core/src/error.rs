use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to
/// tell which precondition failed.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),

    #[error("spectrum is not conjugate-symmetric (mismatch {mismatch:.3e} at mode {mode})")]
    NotConjugateSymmetric { mode: usize, mismatch: f64 },

    #[error("quadrature order {0} outside [2, 256]")]
    QuadratureOrder(usize),

    #[error("covariance is not positive semidefinite: {0}")]
    Indefinite(String),

    #[error("negative variance {0}")]
    NegativeVariance(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("layer {layer} out of range 1..={depth}")]
    LayerOutOfRange { layer: usize, depth: usize },

    #[error("correlation {0} outside [-1, 1]")]
    CorrelationOutOfRange(f64),

    #[error("variance fixed-point iteration diverged (q = {q:.3e} after {iterations} steps)")]
    Diverged { q: f64, iterations: usize },

    #[error("degenerate eigenbasis: {0}")]
    Degenerate(String),

    #[error("singular Gram matrix")]
    SingularGram,

    #[error("no sign change of chi_c - 1 on [{lo}, {hi}] (values {f_lo:.6}, {f_hi:.6})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("dimension {n} too large for a dense N^2 x N^2 Jacobian (max {max})")]
    TooLarge { n: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
