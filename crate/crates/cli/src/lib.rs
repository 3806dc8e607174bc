//! Command-line driver for the theory calculators and experiments, with the
//! CSV and JSON writers.
//!
//! Every output file `<stem>.csv` or `<stem>.json` gets a sidecar
//! `<stem>.meta.json` holding the full [`RunConfig`], from which the run can
//! be repeated with `--from-meta`.

use clap::{Parser, ValueEnum};
use fno_edge_core::experiments::{
    run_cov_evolution, run_gradnorm, run_phase_scan, run_theory_vs_sim, run_toy_train, ExperimentResult,
    InputKind, Table, ToyTrainSpec, DEFAULT_LEARNING_RATE, DEFAULT_REPLICAS, DEFAULT_SAMPLES,
};
use fno_edge_core::fno::{FnoConfig, InitConfig, Variant};
use fno_edge_core::meanfield::{
    build_jacobian, chi_set, find_edge_sigma2, fno_c_map, solve_q_star, CovMatrix, Hyperparams,
};
use fno_edge_core::numerics::QuadratureRule;
use fno_edge_core::Activation;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "FNO_EDGE_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "fno-edge-out";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Linearization constants at the fixed point (JSON on stdout).
    Chi,
    /// Variance fixed point and the covariance-map residual there.
    FixedPoint,
    /// Critical weight variance for the given bias variance.
    Edge,
    /// Dense Jacobian of the covariance map and its singular values.
    Jacobian,
    /// Per-layer gradient norms over a weight-variance grid.
    Gradnorm,
    /// Empirical position covariance at selected layers.
    CovEvolve,
    /// Empirical covariance against the iterated covariance map.
    TheoryVsSim,
    /// Edge-of-chaos boundary over a bias-variance grid.
    PhaseScan,
    /// Teacher-student training over a (weight variance, depth) grid.
    ToyTrain,
    /// Initialization variances of every parameter tensor.
    InitExport,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Chi => "chi",
            Command::FixedPoint => "fixed-point",
            Command::Edge => "edge",
            Command::Jacobian => "jacobian",
            Command::Gradnorm => "gradnorm",
            Command::CovEvolve => "cov-evolve",
            Command::TheoryVsSim => "theory-vs-sim",
            Command::PhaseScan => "phase-scan",
            Command::ToyTrain => "toy-train",
            Command::InitExport => "init-export",
        }
    }
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub width: usize,
    pub modes: usize,
    pub depth: usize,
    pub activation: Activation,
    pub variant: Variant,
    pub sigma2: f64,
    pub sigma_b2: f64,
    pub seed: u64,
    pub replicas: usize,
    pub sigma2_grid: Vec<f64>,
    pub sigma_b2_grid: Vec<f64>,
    pub bracket: (f64, f64),
    pub layers: Vec<usize>,
    pub input: InputKind,
    pub steps: usize,
    pub learning_rate: f64,
    pub samples: usize,
    pub depths: Vec<usize>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Parser)]
#[command(name = "fno-edge", version, about = "Mean-field theory and simulation of random Fourier neural operators")]
pub struct Args {
    /// Command to run.
    #[arg(value_enum, required_unless_present = "from_meta")]
    pub command: Option<Command>,
    /// Repeat the run recorded in a `.meta.json` sidecar.
    #[arg(long, conflicts_with = "command")]
    pub from_meta: Option<PathBuf>,
    /// Spatial resolution N (power of two).
    #[arg(long, short = 'n', default_value_t = 64)]
    pub n: usize,
    /// Channel width D.
    #[arg(long, short = 'd', default_value_t = 32)]
    pub width: usize,
    /// Retained Fourier modes K.
    #[arg(long, short = 'k', default_value_t = 12)]
    pub modes: usize,
    /// Depth L.
    #[arg(long, short = 'l', default_value_t = 64)]
    pub depth: usize,
    #[arg(long, default_value = "relu")]
    pub activation: Activation,
    #[arg(long, default_value = "simplified")]
    pub variant: Variant,
    /// Weight variance for single-point commands.
    #[arg(long, default_value_t = 2.0)]
    pub sigma2: f64,
    /// Bias variance.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_b2: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent weight draws for Monte Carlo commands.
    #[arg(long, default_value_t = DEFAULT_REPLICAS)]
    pub replicas: usize,
    /// Weight-variance grid for gradnorm, phase-scan and toy-train.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
    pub sigma2_grid: Vec<f64>,
    /// Bias-variance grid for phase-scan.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5])]
    pub sigma_b2_grid: Vec<f64>,
    /// Lower end of the edge-finder bracket.
    #[arg(long, default_value_t = 0.5)]
    pub bracket_lo: f64,
    /// Upper end of the edge-finder bracket.
    #[arg(long, default_value_t = 8.0)]
    pub bracket_hi: f64,
    /// Layers recorded by cov-evolve; defaults to powers of two up to L and L.
    #[arg(long, value_delimiter = ',')]
    pub layers: Vec<usize>,
    /// Input field for cov-evolve and theory-vs-sim.
    #[arg(long, default_value = "gaussian")]
    pub input: InputKind,
    /// Gradient-descent steps for toy-train.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    pub learning_rate: f64,
    /// Training fields for toy-train.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Student depths for toy-train.
    #[arg(long, value_delimiter = ',', default_values_t = [4, 32])]
    pub depths: Vec<usize>,
    /// Output directory.
    #[arg(long, short = 'o', env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fno_edge_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    /// 2 for configuration and output-location problems, 1 for numerical
    /// failures of a valid configuration.
    pub fn exit_code(&self) -> i32 {
        use fno_edge_core::Error as E;
        match self {
            CliError::Core(
                E::Diverged { .. } | E::Degenerate(_) | E::SingularGram | E::Indefinite(_) | E::NotConjugateSymmetric { .. },
            ) => 1,
            CliError::Csv { .. } => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl RunConfig {
    pub fn from_args(args: &Args) -> CliResult<RunConfig> {
        if let Some(path) = &args.from_meta {
            let mut cfg = RunConfig::from_meta(path)?;
            if let Some(dir) = &args.output_dir {
                cfg.output_dir = dir.clone();
            }
            return Ok(cfg);
        }
        let command = args.command.ok_or_else(|| CliError::Config("no command given".into()))?;
        let layers = if args.layers.is_empty() {
            let mut v: Vec<usize> = std::iter::successors(Some(1usize), |&l| Some(l * 2))
                .take_while(|&l| l < args.depth)
                .collect();
            v.push(args.depth);
            v
        } else {
            args.layers.clone()
        };
        Ok(RunConfig {
            command,
            n: args.n,
            width: args.width,
            modes: args.modes,
            depth: args.depth,
            activation: args.activation,
            variant: args.variant,
            sigma2: args.sigma2,
            sigma_b2: args.sigma_b2,
            seed: args.seed,
            replicas: args.replicas,
            sigma2_grid: args.sigma2_grid.clone(),
            sigma_b2_grid: args.sigma_b2_grid.clone(),
            bracket: (args.bracket_lo, args.bracket_hi),
            layers,
            input: args.input,
            steps: args.steps,
            learning_rate: args.learning_rate,
            samples: args.samples,
            depths: args.depths.clone(),
            output_dir: args
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        })
    }

    /// Reads the `run_config` entry of a sidecar.
    pub fn from_meta(path: &Path) -> CliResult<RunConfig> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        let value: Value = serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.into(), source })?;
        serde_json::from_value(value["run_config"].clone()).map_err(|source| CliError::Json { path: path.into(), source })
    }

    fn fno_config(&self) -> CliResult<FnoConfig> {
        Ok(FnoConfig::new(self.n, self.width, self.modes, self.depth, self.activation, self.variant)?)
    }

    fn hyperparams(&self) -> CliResult<Hyperparams> {
        Ok(Hyperparams::new(self.activation, self.sigma2, self.sigma_b2)?)
    }

    fn init(&self) -> CliResult<InitConfig> {
        Ok(InitConfig::for_variant(self.variant, self.sigma2, self.sigma_b2, self.seed)?)
    }

    fn validate(&self) -> CliResult<()> {
        let nonempty = [
            ("sigma2-grid", self.sigma2_grid.is_empty()),
            ("sigma-b2-grid", self.sigma_b2_grid.is_empty()),
            ("depths", self.depths.is_empty()),
            ("layers", self.layers.is_empty()),
        ];
        if let Some((name, _)) = nonempty.iter().find(|(_, empty)| *empty) {
            return Err(CliError::Config(format!("--{name} must not be empty")));
        }
        if self.replicas == 0 || self.steps == 0 || self.samples == 0 {
            return Err(CliError::Config("replicas, steps and samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match RunConfig::from_args(&args).and_then(|cfg| run(&cfg)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command and writes its outputs.
pub fn run(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate()?;
    let rule = QuadratureRule::default();
    match cfg.command {
        Command::Chi => {
            let hp = cfg.hyperparams()?;
            let mode = cfg.fno_config()?.mode_spec()?;
            let p = solve_q_star(&hp, &rule)?;
            let chis = chi_set(&p, &hp, &mode, &rule)?;
            emit_json(
                cfg,
                "chi",
                json!({
                    "q_star": p.q,
                    "c_star": p.c,
                    "chi_q": chis.chi_q,
                    "chi_c": chis.chi_c,
                    "chi_kappa": chis.chi_kappa,
                    "chi_total": chis.chi_total,
                }),
            )
        }
        Command::FixedPoint => {
            let hp = cfg.hyperparams()?;
            let mode = cfg.fno_config()?.mode_spec()?;
            let p = solve_q_star(&hp, &rule)?;
            let star = CovMatrix::constant(cfg.n, p.q);
            let img = fno_c_map(&star, &hp, &mode, &rule)?;
            let residual = (img.values() - star.values()).abs().max();
            emit_json(
                cfg,
                "fixed_point",
                json!({ "q_star": p.q, "c_star": p.c, "residual_inf": residual }),
            )
        }
        Command::Edge => {
            let s = find_edge_sigma2(cfg.sigma_b2, cfg.activation, cfg.bracket, &rule)?;
            emit_json(cfg, "edge", json!({ "sigma_b2": cfg.sigma_b2, "sigma2_critical": s }))
        }
        Command::InitExport => {
            cfg.fno_config()?;
            let v = cfg.init()?.variances(cfg.width);
            emit_json(
                cfg,
                "init",
                json!({
                    "variant": cfg.variant,
                    "width": cfg.width,
                    "theta": v.theta,
                    "xi": v.xi,
                    "dense": v.dense,
                    "bias": v.bias,
                }),
            )
        }
        Command::Jacobian => {
            let hp = cfg.hyperparams()?;
            let mode = cfg.fno_config()?.mode_spec()?;
            let p = solve_q_star(&hp, &rule)?;
            let j = build_jacobian(&chi_set(&p, &hp, &mode, &rule)?, &mode)?;
            let mut entries = Table::new("jacobian", &["row", "col", "value"]);
            for r in 0..j.nrows() {
                for c in 0..j.ncols() {
                    entries.push(vec![r as f64, c as f64, j[(r, c)]])?;
                }
            }
            let mut sv = Table::new("singular_values", &["index", "value"]);
            let mut values: Vec<f64> = j.singular_values().iter().copied().collect();
            values.sort_by(|a, b| b.total_cmp(a));
            for (i, v) in values.into_iter().enumerate() {
                sv.push(vec![i as f64, v])?;
            }
            emit_tables(cfg, &[entries, sv], &[])
        }
        Command::Gradnorm => {
            let r = run_gradnorm(&cfg.fno_config()?, &cfg.sigma2_grid, cfg.sigma_b2, cfg.replicas, cfg.seed)?;
            emit_result(cfg, &r)
        }
        Command::CovEvolve => {
            let r = run_cov_evolution(&cfg.fno_config()?, &cfg.init()?, &cfg.layers, cfg.input)?;
            emit_result(cfg, &r)
        }
        Command::TheoryVsSim => {
            let r = run_theory_vs_sim(&cfg.fno_config()?, &cfg.init()?, cfg.depth, cfg.replicas, cfg.input)?;
            emit_result(cfg, &r)
        }
        Command::PhaseScan => {
            let r = run_phase_scan(cfg.activation, &cfg.sigma_b2_grid, cfg.bracket, &cfg.sigma2_grid)?;
            emit_result(cfg, &r)
        }
        Command::ToyTrain => {
            let grid: Vec<(f64, usize)> = cfg
                .depths
                .iter()
                .flat_map(|&l| cfg.sigma2_grid.iter().map(move |&s| (s, l)))
                .collect();
            let spec = ToyTrainSpec {
                steps: cfg.steps,
                learning_rate: cfg.learning_rate,
                samples: cfg.samples,
                sigma_b2: cfg.sigma_b2,
                root_seed: cfg.seed,
            };
            let r = run_toy_train(&cfg.fno_config()?, &grid, &spec)?;
            emit_result(cfg, &r)
        }
    }
}

fn output_dir(cfg: &RunConfig) -> CliResult<&Path> {
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
    Ok(dir)
}

fn sidecar(cfg: &RunConfig, stem: &str, extra: Value) -> CliResult<()> {
    let path = output_dir(cfg)?.join(format!("{stem}.meta.json"));
    let meta = json!({
        "artifact": "fno-edge",
        "artifact_version": ARTIFACT_VERSION,
        "command": cfg.command.name(),
        "seed": cfg.seed,
        "run_config": cfg,
        "details": extra,
    });
    write_json(&path, &meta)
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json { path: path.into(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

/// Writes `<stem>.meta.json`, then `<stem>.json`, and echoes the value.
fn emit_json(cfg: &RunConfig, stem: &str, value: Value) -> CliResult<()> {
    sidecar(cfg, stem, Value::Null)?;
    write_json(&output_dir(cfg)?.join(format!("{stem}.json")), &value)?;
    println!("{}", serde_json::to_string(&value).expect("plain JSON value"));
    Ok(())
}

fn emit_result(cfg: &RunConfig, r: &ExperimentResult) -> CliResult<()> {
    emit_tables(cfg, &r.tables, &r.parameters)
}

fn emit_tables(cfg: &RunConfig, tables: &[Table], parameters: &[(String, String)]) -> CliResult<()> {
    let dir = output_dir(cfg)?.to_path_buf();
    for t in tables {
        sidecar(cfg, &t.name, json!({ "table": t.name, "columns": t.columns, "parameters": parameters }))?;
        let path = dir.join(format!("{}.csv", t.name));
        write_csv(t, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}

/// Header row plus one record per table row, floats in 17 significant
/// digits, LF line endings.
pub fn write_csv(table: &Table, path: &Path) -> CliResult<()> {
    let csv_err = |source| CliError::Csv { path: path.into(), source };
    if table.rows.iter().any(|r| r.len() != table.columns.len()) {
        return Err(CliError::Config(format!("table '{}' has ragged rows", table.name)));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format_float(*v))).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.into(), source })
}

/// Round-trip exact rendering with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}
