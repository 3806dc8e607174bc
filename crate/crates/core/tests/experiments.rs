use fno_edge_core::experiments::{
    mean_std, run_cov_evolution, run_gradnorm, run_phase_scan, run_theory_vs_sim, run_toy_train, InputKind,
    ToyTrainSpec,
};
use fno_edge_core::fno::{FnoConfig, InitConfig, Variant};
use fno_edge_core::{Activation, Error};

fn small(act: Activation) -> FnoConfig {
    FnoConfig::new(16, 8, 4, 12, act, Variant::Simplified).unwrap()
}

#[test]
fn every_experiment_is_bitwise_reproducible() {
    let c = small(Activation::Tanh);
    let init = InitConfig::for_variant(Variant::Simplified, 1.5, 0.1, 3).unwrap();
    let a = run_gradnorm(&c, &[1.0, 2.0], 0.1, 2, 3).unwrap();
    assert!(a.bitwise_eq(&run_gradnorm(&c, &[1.0, 2.0], 0.1, 2, 3).unwrap()));
    let a = run_cov_evolution(&c, &init, &[1, 6, 12], InputKind::Gaussian).unwrap();
    assert!(a.bitwise_eq(&run_cov_evolution(&c, &init, &[1, 6, 12], InputKind::Gaussian).unwrap()));
    let a = run_theory_vs_sim(&c, &init, 4, 2, InputKind::Constant).unwrap();
    assert!(a.bitwise_eq(&run_theory_vs_sim(&c, &init, 4, 2, InputKind::Constant).unwrap()));
    let a = run_phase_scan(Activation::Tanh, &[0.1], (0.5, 4.0), &[1.0]).unwrap();
    assert!(a.bitwise_eq(&run_phase_scan(Activation::Tanh, &[0.1], (0.5, 4.0), &[1.0]).unwrap()));
    let spec = ToyTrainSpec { steps: 3, learning_rate: 0.1, samples: 4, sigma_b2: 0.0, root_seed: 3 };
    let c = FnoConfig::new(8, 4, 3, 2, Activation::Relu, Variant::Simplified).unwrap();
    let a = run_toy_train(&c, &[(2.0, 2)], &spec).unwrap();
    assert!(a.bitwise_eq(&run_toy_train(&c, &[(2.0, 2)], &spec).unwrap()));
}

#[test]
fn gradnorm_schema_and_seed_sensitivity() {
    let c = small(Activation::Relu);
    let r = run_gradnorm(&c, &[2.0], 0.0, 2, 0).unwrap();
    let t = r.table("gradnorm").unwrap();
    assert_eq!(t.columns, ["sigma2", "layer", "mean_log_gradnorm", "std_log_gradnorm", "theory_log_chi_c"]);
    assert_eq!(t.rows.len(), 12);
    assert_eq!(r.table("slopes").unwrap().columns, ["sigma2", "slope", "theory_log_chi_c"]);
    let other = run_gradnorm(&c, &[2.0], 0.0, 2, 1).unwrap();
    assert!(!r.bitwise_eq(&other));
}

#[test]
fn doubling_replicas_moves_means_by_under_three_standard_errors() {
    let c = FnoConfig::new(32, 16, 6, 16, Activation::Relu, Variant::Simplified).unwrap();
    let few = run_gradnorm(&c, &[2.0], 0.0, 8, 0).unwrap();
    let many = run_gradnorm(&c, &[2.0], 0.0, 16, 0).unwrap();
    let (a, b) = (few.table("gradnorm").unwrap(), many.table("gradnorm").unwrap());
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let se = ra[3] / 8f64.sqrt();
        assert!((ra[2] - rb[2]).abs() < 3.0 * se, "layer {}: {} vs {} (se {se})", ra[1], ra[2], rb[2]);
    }
}

#[test]
fn relu_slopes_track_log_chi() {
    let c = FnoConfig::new(32, 32, 8, 32, Activation::Relu, Variant::Simplified).unwrap();
    let r = run_gradnorm(&c, &[1.0, 2.0, 4.0], 0.0, 8, 0).unwrap();
    for row in &r.table("slopes").unwrap().rows {
        let (slope, theory) = (row[1], row[2]);
        assert!((slope - theory).abs() <= 0.05f64.max(0.2 * theory.abs()), "sigma2 {}: {slope} vs {theory}", row[0]);
    }
}

#[test]
fn covariance_table_layout() {
    let c = small(Activation::Tanh);
    let init = InitConfig::for_variant(Variant::Simplified, 1.5, 0.1, 0).unwrap();
    let r = run_cov_evolution(&c, &init, &[1, 12], InputKind::Gaussian).unwrap();
    let t = r.table("covariance").unwrap();
    assert_eq!(t.columns, ["layer", "alpha", "alpha_prime", "covariance", "correlation"]);
    assert_eq!(t.rows.len(), 2 * 16 * 16);
    for row in &t.rows {
        if row[1] == row[2] {
            assert!((row[4] - 1.0).abs() < 1e-12);
        }
    }
    assert!(matches!(
        run_cov_evolution(&c, &init, &[13], InputKind::Gaussian),
        Err(Error::LayerOutOfRange { layer: 13, depth: 12 })
    ));
}

#[test]
fn phase_boundary_examples() {
    let r = run_phase_scan(Activation::Relu, &[0.0, 0.3], (0.5, 8.0), &[1.0, 2.0, 4.0]).unwrap();
    for s in r.table("phase_boundary").unwrap().column("sigma2_critical").unwrap() {
        assert!((s - 2.0).abs() <= 1e-6);
    }
    let r = run_phase_scan(Activation::Tanh, &[0.0, 0.1], (0.5, 8.0), &[1.0]).unwrap();
    let s = r.table("phase_boundary").unwrap().column("sigma2_critical").unwrap();
    assert!((s[0] - 1.0).abs() < 1e-3, "{}", s[0]);
    assert!(s[1] > 1.0 && s[1] < 3.0, "{}", s[1]);
    assert_eq!(r.table("chi_c_grid").unwrap().rows.len(), 2);
}

#[test]
fn toy_train_records_divergence_as_a_sentinel() {
    let c = FnoConfig::new(8, 4, 3, 8, Activation::Relu, Variant::Simplified).unwrap();
    let spec = ToyTrainSpec { steps: 20, learning_rate: 1e200, samples: 4, sigma_b2: 0.0, root_seed: 0 };
    let r = run_toy_train(&c, &[(4.0, 8)], &spec).unwrap();
    let summary = r.table("summary").unwrap();
    assert_eq!(summary.columns, ["sigma2", "depth", "initial_loss", "final_loss", "ratio"]);
    assert!(!summary.rows[0][3].is_finite());
    let curve = r.table("loss_curve").unwrap();
    assert!(curve.rows.len() <= 21);
    assert!(!curve.rows.last().unwrap()[3].is_finite());
}

#[test]
fn toy_train_rejects_bad_settings() {
    let c = FnoConfig::new(8, 4, 3, 2, Activation::Relu, Variant::Simplified).unwrap();
    let spec = ToyTrainSpec { steps: 0, learning_rate: 0.1, samples: 4, sigma_b2: 0.0, root_seed: 0 };
    assert!(run_toy_train(&c, &[(2.0, 2)], &spec).is_err());
    let spec = ToyTrainSpec { steps: 1, learning_rate: -1.0, ..spec };
    assert!(run_toy_train(&c, &[(2.0, 2)], &spec).is_err());
}

#[test]
fn mean_std_of_constant_and_pair() {
    assert_eq!(mean_std(&[3.0, 3.0, 3.0]), (3.0, 0.0));
    let (m, s) = mean_std(&[1.0, 3.0]);
    assert_eq!(m, 2.0);
    assert!((s - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn toy_train_cells_start_at_the_target_variance() {
    // Students fit their offset from initialization, so the starting loss
    // is the centered target second moment whatever σ² or depth.
    let c = FnoConfig::new(8, 4, 3, 2, Activation::Relu, Variant::Simplified).unwrap();
    let spec = ToyTrainSpec { steps: 1, learning_rate: 0.01, samples: 4, sigma_b2: 0.0, root_seed: 5 };
    let r = run_toy_train(&c, &[(0.5, 2), (2.0, 3), (4.0, 6)], &spec).unwrap();
    let init = r.table("summary").unwrap().column("initial_loss").unwrap();
    for v in &init[1..] {
        assert!((v - init[0]).abs() <= 1e-12 * init[0], "{init:?}");
    }
}
