use super::table::{fit_slope, mean_std, ExperimentKind, ExperimentResult, Table};
use crate::error::{Error, Result};
use crate::fno::{
    backward, empirical_grad_norm, forward, init_params_replica, loss_abs_mean_grad, standard_normal_input, FnoConfig,
    InitConfig,
};
use crate::meanfield::{chi_c_at, Hyperparams};
use crate::numerics::QuadratureRule;

/// Layers dropped from the slope fit at the input and output ends.
pub const SLOPE_SKIP_FIRST: usize = 4;
pub const SLOPE_SKIP_LAST: usize = 2;

/// Per-layer gradient norms under the mean-absolute-value loss.
///
/// Tables: `gradnorm` (sigma2, layer, mean_log_gradnorm, std_log_gradnorm,
/// theory_log_chi_c) and `slopes` (sigma2, slope, theory_log_chi_c). The
/// slope is fitted against backpropagation depth `L − ℓ`, so it estimates
/// `log χ_c`.
pub fn run_gradnorm(
    config: &FnoConfig,
    sigma2_grid: &[f64],
    sigma_b2: f64,
    replicas: usize,
    root_seed: u64,
) -> Result<ExperimentResult> {
    config.validate()?;
    if replicas == 0 {
        return Err(Error::InvalidConfig("replicas must be >= 1".into()));
    }
    if config.depth <= SLOPE_SKIP_FIRST + SLOPE_SKIP_LAST + 1 {
        return Err(Error::InvalidConfig(format!(
            "depth {} too shallow for the slope fit",
            config.depth
        )));
    }
    let rule = QuadratureRule::default();
    let mut table = Table::new(
        "gradnorm",
        &["sigma2", "layer", "mean_log_gradnorm", "std_log_gradnorm", "theory_log_chi_c"],
    );
    let mut slopes = Table::new("slopes", &["sigma2", "slope", "theory_log_chi_c"]);
    let depth = config.depth;
    for &sigma2 in sigma2_grid {
        let init = InitConfig::for_variant(config.variant, sigma2, sigma_b2, root_seed)?;
        init.check_against(config)?;
        let theory = chi_c_at(&Hyperparams::new(config.activation, sigma2, sigma_b2)?, &rule)?.ln();
        let mut logs = vec![Vec::with_capacity(replicas); depth];
        for r in 0..replicas {
            let params = init_params_replica(config, &init, r)?;
            let x = standard_normal_input(config.n, config.width, root_seed, r)?;
            let trace = forward(&params, config, &x)?;
            let g = backward(&params, config, &trace, &loss_abs_mean_grad(trace.output()))?;
            for (l, v) in logs.iter_mut().enumerate() {
                v.push(empirical_grad_norm(&g, l + 1)?.ln());
            }
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (l, v) in logs.iter().enumerate() {
            let layer = l + 1;
            let (m, s) = mean_std(v);
            table.push(vec![sigma2, layer as f64, m, s, theory])?;
            if layer > SLOPE_SKIP_FIRST && layer + SLOPE_SKIP_LAST <= depth && m.is_finite() {
                xs.push((depth - layer) as f64);
                ys.push(m);
            }
        }
        slopes.push(vec![sigma2, fit_slope(&xs, &ys), theory])?;
    }
    let mut out = ExperimentResult::new(ExperimentKind::Gradnorm, root_seed)
        .param("config", format!("{config:?}"))
        .param("sigma2_grid", format!("{sigma2_grid:?}"))
        .param("sigma_b2", sigma_b2)
        .param("replicas", replicas);
    out.tables = vec![table, slopes];
    Ok(out)
}
