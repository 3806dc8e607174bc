pub mod activation;
pub mod error;
pub mod experiments;
pub mod fno;
pub mod meanfield;
pub mod numerics;

pub use activation::Activation;
pub use error::{Error, Result};
