use super::table::{ExperimentKind, ExperimentResult, Table};
use crate::activation::Activation;
use crate::error::Result;
use crate::meanfield::{chi_c_at, find_edge_sigma2, Hyperparams};
use crate::numerics::QuadratureRule;

/// Edge-of-chaos boundary over a bias-variance grid, plus `χ_c` on a
/// `(σ_b², σ²)` grid for contour plots.
///
/// Tables: `phase_boundary` (sigma_b2, sigma2_critical) and `chi_c_grid`
/// (sigma_b2, sigma2, chi_c).
pub fn run_phase_scan(
    activation: Activation,
    sigma_b2_grid: &[f64],
    bracket: (f64, f64),
    sigma2_grid: &[f64],
) -> Result<ExperimentResult> {
    let rule = QuadratureRule::default();
    let mut boundary = Table::new("phase_boundary", &["sigma_b2", "sigma2_critical"]);
    let mut grid = Table::new("chi_c_grid", &["sigma_b2", "sigma2", "chi_c"]);
    for &sb in sigma_b2_grid {
        boundary.push(vec![sb, find_edge_sigma2(sb, activation, bracket, &rule)?])?;
        for &s in sigma2_grid {
            grid.push(vec![sb, s, chi_c_at(&Hyperparams::new(activation, s, sb)?, &rule)?])?;
        }
    }
    let mut out = ExperimentResult::new(ExperimentKind::PhaseScan, 0)
        .param("activation", activation)
        .param("sigma_b2_grid", format!("{sigma_b2_grid:?}"))
        .param("bracket", format!("{bracket:?}"))
        .param("sigma2_grid", format!("{sigma2_grid:?}"));
    out.tables = vec![boundary, grid];
    Ok(out)
}
