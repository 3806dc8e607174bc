use super::table::{ExperimentKind, ExperimentResult, Table};
use crate::error::{Error, Result};
use crate::fno::{empirical_cov, forward_with, standard_normal_input, FnoConfig, InitConfig, StreamedParams};
use crate::meanfield::{fno_c_map, initial_covariance_from_input, CovMatrix};
use crate::numerics::{QuadratureRule, RngStream, StreamTag};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Layer-0 input field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    /// i.i.d. standard normal entries.
    Gaussian,
    /// One standard normal value per feature, repeated over positions; its
    /// covariance is already of the fixed-point form `q·11ᵀ`.
    Constant,
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputKind::Gaussian => "gaussian",
            InputKind::Constant => "constant",
        })
    }
}

impl FromStr for InputKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(InputKind::Gaussian),
            "constant" => Ok(InputKind::Constant),
            other => Err(Error::InvalidConfig(format!("unknown input kind '{other}'"))),
        }
    }
}

pub fn make_input(kind: InputKind, n: usize, d: usize, root_seed: u64) -> Result<DMatrix<f64>> {
    match kind {
        InputKind::Gaussian => standard_normal_input(n, d, root_seed, 0),
        InputKind::Constant => {
            let z = RngStream::new(root_seed, StreamTag::Input, 0, 1, 0).sample_normal(1.0, d)?;
            Ok(DMatrix::from_fn(n, d, |_, j| z[j]))
        }
    }
}

/// Empirical covariance and correlation matrices of one wide network at the
/// requested layers. Table `covariance`: layer, alpha, alpha_prime,
/// covariance, correlation.
pub fn run_cov_evolution(
    config: &FnoConfig,
    init: &InitConfig,
    layers_to_record: &[usize],
    input: InputKind,
) -> Result<ExperimentResult> {
    let src = StreamedParams::new(*config, *init, 0)?;
    if let Some(&bad) = layers_to_record.iter().find(|&&l| l == 0 || l > config.depth) {
        return Err(Error::LayerOutOfRange {
            layer: bad,
            depth: config.depth,
        });
    }
    let x = make_input(input, config.n, config.width, init.root_seed)?;
    let trace = forward_with(&src, config, &x)?;
    let mut table = Table::new("covariance", &["layer", "alpha", "alpha_prime", "covariance", "correlation"]);
    for &l in layers_to_record {
        let cov = empirical_cov(&trace, l)?;
        let corr = cov.correlation();
        for a in 0..config.n {
            for b in 0..config.n {
                table.push(vec![l as f64, a as f64, b as f64, cov.values()[(a, b)], corr[(a, b)]])?;
            }
        }
    }
    let mut out = ExperimentResult::new(ExperimentKind::CovEvolution, init.root_seed)
        .param("config", format!("{config:?}"))
        .param("init", format!("{init:?}"))
        .param("layers", format!("{layers_to_record:?}"))
        .param("input", input);
    out.tables = vec![table];
    Ok(out)
}

/// Per-layer relative Frobenius error between the replica-averaged
/// empirical covariance and the iterated covariance map started from the
/// exact first-layer covariance of the input.
///
/// Table `theory_vs_sim`: layer, rel_frobenius_error, theory_mean_diag,
/// empirical_mean_diag.
pub fn run_theory_vs_sim(
    config: &FnoConfig,
    init: &InitConfig,
    depth_checked: usize,
    replicas: usize,
    input: InputKind,
) -> Result<ExperimentResult> {
    if depth_checked == 0 || replicas == 0 {
        return Err(Error::InvalidConfig("depth_checked and replicas must be >= 1".into()));
    }
    let cfg = FnoConfig {
        depth: depth_checked,
        ..*config
    };
    init.check_against(&cfg)?;
    let hp = init.hyperparams(cfg.activation)?;
    let mode = cfg.mode_spec()?;
    let rule = QuadratureRule::default();
    let x = make_input(input, cfg.n, cfg.width, init.root_seed)?;

    let mut theory = Vec::with_capacity(depth_checked);
    theory.push(initial_covariance_from_input(&x, &hp, &mode)?);
    for l in 1..depth_checked {
        theory.push(fno_c_map(&theory[l - 1], &hp, &mode, &rule)?);
    }

    let mut sums = vec![DMatrix::<f64>::zeros(cfg.n, cfg.n); depth_checked];
    for r in 0..replicas {
        let trace = forward_with(&StreamedParams::new(cfg, *init, r)?, &cfg, &x)?;
        for (l, s) in sums.iter_mut().enumerate() {
            *s += empirical_cov(&trace, l + 1)?.values();
        }
    }
    let mut table = Table::new(
        "theory_vs_sim",
        &["layer", "rel_frobenius_error", "theory_mean_diag", "empirical_mean_diag"],
    );
    for (l, (s, t)) in sums.into_iter().zip(&theory).enumerate() {
        let emp = CovMatrix::new(s / replicas as f64)?;
        let err = emp.relative_frobenius_error(t);
        let n = cfg.n as f64;
        table.push(vec![
            (l + 1) as f64,
            err,
            t.values().trace() / n,
            emp.values().trace() / n,
        ])?;
    }
    let mut out = ExperimentResult::new(ExperimentKind::TheoryVsSim, init.root_seed)
        .param("config", format!("{cfg:?}"))
        .param("init", format!("{init:?}"))
        .param("replicas", replicas)
        .param("input", input);
    out.tables = vec![table];
    Ok(out)
}
