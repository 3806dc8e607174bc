//! Teacher-student regression with full-batch gradient descent.

use super::table::{ExperimentKind, ExperimentResult, Table};
use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::fno::{
    backward_from_pre, forward, init_params, init_params_replica, FnoConfig, FnoParams, InitConfig, Variant,
};
use crate::numerics::{RngStream, StreamTag};
use nalgebra::DMatrix;

pub const TEACHER_DEPTH: usize = 2;
pub const DEFAULT_SAMPLES: usize = 64;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;

/// Toy-training settings shared by every grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyTrainSpec {
    pub steps: usize,
    pub learning_rate: f64,
    pub samples: usize,
    pub sigma_b2: f64,
    pub root_seed: u64,
}

/// Teacher inputs and targets: the last pre-activation of a depth-2
/// He-initialized ReLU network with the student's spatial and mode layout.
/// Targets are centered per channel so a bias-only fit gains nothing.
fn teacher_data(config: &FnoConfig, spec: &ToyTrainSpec) -> Result<Vec<(DMatrix<f64>, DMatrix<f64>)>> {
    let tcfg = FnoConfig {
        depth: TEACHER_DEPTH,
        activation: Activation::Relu,
        variant: Variant::Simplified,
        ..*config
    };
    let teacher_seed = RngStream::new(spec.root_seed, StreamTag::Teacher, 0, 0, 0).seed();
    let teacher = init_params(&tcfg, &InitConfig::he_simplified(teacher_seed))?;
    let mut data = (0..spec.samples)
        .map(|s| {
            let v = RngStream::new(spec.root_seed, StreamTag::Input, 1, 0, s)
                .sample_normal(1.0, config.n * config.width)?;
            let x = DMatrix::from_vec(config.n, config.width, v);
            let mut t = forward(&teacher, &tcfg, &x)?;
            let y = t.pre.pop().expect("teacher has layers");
            Ok((x, y))
        })
        .collect::<Result<Vec<_>>>()?;
    let count = (spec.samples * config.n) as f64;
    for j in 0..config.width {
        let mean = data.iter().map(|(_, y)| y.column(j).sum()).sum::<f64>() / count;
        for (_, y) in data.iter_mut() {
            y.column_mut(j).add_scalar_mut(-mean);
        }
    }
    Ok(data)
}

/// Mean squared error over samples and entries, and optionally its gradient.
fn loss_and_grad(
    params: &FnoParams,
    config: &FnoConfig,
    data: &[(DMatrix<f64>, DMatrix<f64>)],
    with_grad: bool,
) -> Result<(f64, Option<FnoParams>)> {
    let scale = 1.0 / (data.len() * config.n * config.width) as f64;
    let mut loss = 0.0;
    let mut grad = with_grad.then(|| FnoParams::zeros(config));
    for (x, y) in data {
        let trace = forward(params, config, x)?;
        let diff = trace.pre.last().expect("depth >= 1") - y;
        loss += diff.norm_squared() * scale;
        if let Some(g) = grad.as_mut() {
            let gt = backward_from_pre(params, config, &trace, &(diff * (2.0 * scale)))?;
            g.axpy(1.0, &gt.params);
        }
    }
    Ok((loss, grad))
}

/// Trains one student per `(σ², L)` cell.
///
/// Tables: `loss_curve` (sigma2, depth, step, loss) and `summary` (sigma2,
/// depth, initial_loss, final_loss, ratio). A non-finite loss stops the
/// cell and is kept as the final value.
pub fn run_toy_train(
    config: &FnoConfig,
    init_grid: &[(f64, usize)],
    spec: &ToyTrainSpec,
) -> Result<ExperimentResult> {
    config.validate()?;
    if spec.steps == 0 || spec.samples == 0 {
        return Err(Error::InvalidConfig("steps and samples must be >= 1".into()));
    }
    if !(spec.learning_rate.is_finite() && spec.learning_rate > 0.0) {
        return Err(Error::InvalidConfig(format!("bad learning rate {}", spec.learning_rate)));
    }
    let data = teacher_data(config, spec)?;
    let mut curve = Table::new("loss_curve", &["sigma2", "depth", "step", "loss"]);
    let mut summary = Table::new("summary", &["sigma2", "depth", "initial_loss", "final_loss", "ratio"]);
    for &(sigma2, depth) in init_grid {
        let cfg = FnoConfig { depth, ..*config };
        cfg.validate()?;
        let init = InitConfig::for_variant(cfg.variant, sigma2, spec.sigma_b2, spec.root_seed)?;
        let mut params = init_params_replica(&cfg, &init, 0)?;
        // The student predicts its offset from initialization, so every cell
        // starts at the target variance and a falling loss means real fitting.
        let data = data
            .iter()
            .map(|(x, y)| {
                let t = forward(&params, &cfg, x)?;
                Ok((x.clone(), y + t.pre.last().expect("depth >= 1")))
            })
            .collect::<Result<Vec<_>>>()?;
        let (initial, mut grad) = loss_and_grad(&params, &cfg, &data, true)?;
        curve.push(vec![sigma2, depth as f64, 0.0, initial])?;
        let mut last = initial;
        for step in 1..=spec.steps {
            if !last.is_finite() {
                break;
            }
            params.axpy(-spec.learning_rate, &grad.take().expect("gradient of the previous step"));
            let (loss, g) = loss_and_grad(&params, &cfg, &data, step < spec.steps)?;
            last = loss;
            grad = g;
            curve.push(vec![sigma2, depth as f64, step as f64, last])?;
        }
        summary.push(vec![sigma2, depth as f64, initial, last, last / initial])?;
    }
    let mut out = ExperimentResult::new(ExperimentKind::ToyTrain, spec.root_seed)
        .param("config", format!("{config:?}"))
        .param("init_grid", format!("{init_grid:?}"))
        .param("spec", format!("{spec:?}"));
    out.tables = vec![curve, summary];
    Ok(out)
}
