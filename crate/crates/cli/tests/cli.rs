use fno_edge_cli::{format_float, RunConfig};
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn fno_edge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fno-edge"))
        .args(args)
        .env("FNO_EDGE_OUTPUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn chi_at_the_he_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = fno_edge(dir.path(), &["chi", "--activation", "relu", "--sigma2", "2", "--sigma-b2", "0"]);
    let v = json_stdout(&out);
    assert_eq!(v["chi_c"].as_f64(), Some(1.0));
    assert!(dir.path().join("chi.json").exists());
    assert!(dir.path().join("chi.meta.json").exists());
}

#[test]
fn init_export_original_split() {
    let dir = tempfile::tempdir().unwrap();
    let out = fno_edge(dir.path(), &["init-export", "--variant", "original", "--sigma2", "2", "--width", "32"]);
    let v = json_stdout(&out);
    assert_eq!(v["theta"].as_f64(), Some(2.0 / 128.0));
    assert_eq!(v["xi"].as_f64(), Some(2.0 / 128.0));
    assert_eq!(v["dense"].as_f64(), Some(2.0 / 64.0));
    assert_eq!(v["bias"].as_f64(), Some(0.0));
}

#[test]
fn edge_and_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_stdout(&fno_edge(dir.path(), &["edge", "--activation", "relu"]));
    assert!((v["sigma2_critical"].as_f64().unwrap() - 2.0).abs() <= 1e-6);
    let v = json_stdout(&fno_edge(
        dir.path(),
        &["fixed-point", "--activation", "relu", "--sigma2", "1", "--sigma-b2", "0.5", "-n", "16", "-k", "5"],
    ));
    assert!((v["q_star"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(v["residual_inf"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["not-a-command"],
        vec!["chi", "--sigma2", "-1"],
        vec!["gradnorm", "-n", "12"],
        vec!["jacobian"],
        vec!["toy-train", "--steps", "0"],
    ] {
        let out = fno_edge(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn unwritable_output_directory_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = fno_edge(&blocker.join("sub"), &["init-export"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gradnorm_is_byte_identical_on_rerun() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["gradnorm", "-n", "16", "-d", "8", "-k", "4", "-l", "12", "--replicas", "2"];
    for dir in [&a, &b] {
        let out = fno_edge(dir.path(), &args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["gradnorm.csv", "slopes.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let text = std::fs::read_to_string(a.path().join("gradnorm.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("sigma2,layer,mean_log_gradnorm,std_log_gradnorm,theory_log_chi_c")
    );
    // 3 grid values × 12 layers.
    assert_eq!(lines.count(), 36);
}

#[test]
fn sidecar_round_trips_to_the_run_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = fno_edge(
        dir.path(),
        &["cov-evolve", "-n", "8", "-d", "16", "-k", "3", "-l", "4", "--activation", "tanh", "--sigma2", "1.3", "--sigma-b2", "0.1"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = dir.path().join("covariance.meta.json");
    let cfg = RunConfig::from_meta(&meta).unwrap();
    assert_eq!(cfg.n, 8);
    assert_eq!(cfg.sigma2, 1.3);
    assert_eq!(cfg.layers, vec![1, 2, 4]);
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);

    let header = std::fs::read_to_string(dir.path().join("covariance.csv")).unwrap();
    assert!(header.starts_with("layer,alpha,alpha_prime,covariance,correlation\n"));

    // Re-running from the sidecar alone reproduces the table.
    let again = tempfile::tempdir().unwrap();
    let meta_arg = meta.to_str().unwrap();
    let out = fno_edge(again.path(), &["--from-meta", meta_arg, "--output-dir", again.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(dir.path().join("covariance.csv")).unwrap(),
        std::fs::read(again.path().join("covariance.csv")).unwrap()
    );
}

#[test]
fn phase_scan_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = fno_edge(
        dir.path(),
        &["phase-scan", "--activation", "relu", "--sigma-b2-grid", "0,0.1", "--sigma2-grid", "1,2"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("phase_boundary.csv")).unwrap();
    assert!(text.starts_with("sigma_b2,sigma2_critical\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn toy_train_and_theory_vs_sim_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = fno_edge(
        dir.path(),
        &["toy-train", "-n", "8", "-d", "4", "-k", "3", "--depths", "2", "--sigma2-grid", "2", "--steps", "3", "--samples", "4"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(text.starts_with("sigma2,depth,initial_loss,final_loss,ratio\n"));
    let out = fno_edge(
        dir.path(),
        &["theory-vs-sim", "-n", "8", "-d", "16", "-k", "3", "-l", "3", "--replicas", "2"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("theory_vs_sim.meta.json").exists());
}

#[test]
fn floats_round_trip_in_seventeen_digits() {
    for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
        let s = format_float(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
        let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{s}");
    }
}
