//! Monte Carlo studies that confront the mean-field theory with simulated
//! networks. Every result is a deterministic function of its parameters and
//! root seed.

mod covariance;
mod gradnorm;
mod phase;
mod table;
mod train;

pub use covariance::{make_input, run_cov_evolution, run_theory_vs_sim, InputKind};
pub use gradnorm::{run_gradnorm, SLOPE_SKIP_FIRST, SLOPE_SKIP_LAST};
pub use phase::run_phase_scan;
pub use table::{fit_slope, mean_std, ExperimentKind, ExperimentResult, Table};
pub use train::{run_toy_train, ToyTrainSpec, DEFAULT_LEARNING_RATE, DEFAULT_SAMPLES, TEACHER_DEPTH};

/// Replica count when none is given.
pub const DEFAULT_REPLICAS: usize = 16;
