//! Command-line surface for the atomic-recovery library.
//!
//! Exit codes: 0 success, 2 config/usage error, 3 infeasible or
//! refused experiment, 4 solver failure budget exceeded, 1 otherwise.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use atomic_recovery::atoms::Signal;
use atomic_recovery::error::{Error, Result};
use atomic_recovery::experiments::{
    bound_trials_to_csv, run_bound_verification, run_min_measurement_study, run_phase_transition,
    trials_to_csv, write_output, ExperimentConfig, ExperimentKind, OutputFormat,
};
use atomic_recovery::io::{read_matrix_csv, read_vector_csv, AtomicSetSpec};
use atomic_recovery::measure::{
    empirical_width, estimate_params, gaussian_width, mendelson_check, Ensemble, EnsembleKind,
    WidthTarget,
};
use atomic_recovery::nsp::{
    check_plain_nsp, check_s_even, check_splittable, robust_params, stable_rho, strong_constant,
    CertifyOptions,
};
use atomic_recovery::solvers::{solve_min_atomic, MeasurementOperator, SolverOptions};
use atomic_recovery::{AtomicSet, Parallelism};

#[derive(Parser)]
#[command(name = "atomic-recovery", version, about = "Atomic-norm recovery toolbox")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SetArg {
    /// Atomic set: canonical:D | circle:N | frame:PATH | rankone:RxC
    #[arg(long)]
    atoms: String,
}

impl SetArg {
    fn build(&self) -> Result<AtomicSet> {
        AtomicSetSpec::parse(&self.atoms)?.build()
    }
}

#[derive(Args, Clone)]
struct Overrides {
    /// Generic config override, repeatable: --set key=value
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Sparsity grid (e.g. 1..4 or 1,2,3)
    #[arg(long)]
    s: Option<String>,
    /// Measurement grid (e.g. 2..32..2)
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path prefix (writes PREFIX.csv / PREFIX.json)
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json | both
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Overrides {
    fn as_map(&self) -> Result<BTreeMap<String, String>> {
        let mut map = BTreeMap::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad override `{kv}`: expected key=value")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        if let Some(s) = &self.s {
            map.insert("s".into(), s.clone());
        }
        if let Some(m) = &self.m {
            map.insert("m".into(), m.clone());
        }
        if let Some(eps) = self.eps {
            map.insert("eps".into(), eps.to_string());
        }
        if let Some(t) = self.trials {
            map.insert("trials".into(), t.to_string());
        }
        if let Some(seed) = self.seed {
            map.insert("seed".into(), seed.to_string());
        }
        if let Some(out) = &self.out {
            map.insert("out".into(), out.display().to_string());
        }
        if let Some(f) = &self.format {
            map.insert("format".into(), f.clone());
        }
        if let Some(w) = self.workers {
            map.insert("workers".into(), w.to_string());
        }
        Ok(map)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Atomic norm of a signal
    Norm {
        #[command(flatten)]
        set: SetArg,
        /// Signal CSV (vector row, or matrix for rankone sets)
        #[arg(long)]
        signal: PathBuf,
    },
    /// Tail distance to the s-sparse set, with the best approximation
    Tail {
        #[command(flatten)]
        set: SetArg,
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        s: usize,
    },
    /// Solve the constrained atomic-norm minimization
    Solve {
        #[command(flatten)]
        set: SetArg,
        /// Measurement matrix CSV (m x d over flattened signals)
        #[arg(long)]
        operator: PathBuf,
        /// Measurement vector CSV
        #[arg(long)]
        y: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Write the recovered signal CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a null space or structural property
    Certify {
        #[command(flatten)]
        set: SetArg,
        /// plain | stable | robust | strong | splittable | s-even
        #[arg(long)]
        kind: String,
        /// Operator CSV (not needed for structural properties)
        #[arg(long)]
        operator: Option<PathBuf>,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        rho_target: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate a Gaussian or mean empirical width
    Width {
        #[command(flatten)]
        set: SetArg,
        /// Cone parameter; 0 selects the full-sphere calibration mode
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 1)]
        s: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Estimate the mean empirical width of this ensemble instead
        /// of the Gaussian width
        #[arg(long)]
        ensemble: Option<String>,
        /// Number of ensemble vectors per empirical-width sample
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Run a Mendelson small-ball verification
    Mendelson {
        #[command(flatten)]
        set: SetArg,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        m: usize,
        /// xi as a fraction of the ensemble's alpha
        #[arg(long, default_value_t = 0.25)]
        xi_frac: f64,
        #[arg(long, default_value_t = 2.0)]
        t: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "gaussian")]
        ensemble: String,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Phase-transition study over an (m, s) grid
    Phase {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Verify recovery error bounds on a certified instance
    VerifyBounds {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Minimum-measurement study against the lower bound
    MinMeasure {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn read_signal(set: &AtomicSet, path: &Path) -> Result<Signal> {
    match set {
        AtomicSet::RankOne { rows, cols } => {
            let m = read_matrix_csv(path)?;
            if m.nrows() != *rows || m.ncols() != *cols {
                return Err(Error::DimensionMismatch { expected: rows * cols, got: m.len() });
            }
            Ok(Signal::matrix(m))
        }
        _ => Ok(Signal::vector(read_vector_csv(path)?)),
    }
}

fn ensemble_of(name: &str, seed: u64) -> Result<Ensemble> {
    let kind = match name {
        "gaussian" => EnsembleKind::Gaussian,
        "rademacher" => EnsembleKind::Rademacher,
        "uniform" => EnsembleKind::UniformScaled,
        other => return Err(Error::Config(format!("unknown ensemble `{other}`"))),
    };
    Ok(Ensemble { kind, scale: 1.0, seed })
}

fn par_of(workers: usize) -> Parallelism {
    if workers == 0 {
        Parallelism::default()
    } else {
        Parallelism::with_workers(workers)
    }
}

fn print_or_write(out: Option<&Path>, doc: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).expect("serializable") + "\n";
    match out {
        Some(p) => write_output(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(path: &Path, kind: ExperimentKind, ov: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if cfg.kind != kind {
        return Err(Error::Config(format!(
            "config declares {:?}, but this subcommand runs {:?}",
            cfg.kind, kind
        )));
    }
    cfg.apply_overrides(&ov.as_map()?)?;
    cfg.validate()?;
    Ok(cfg)
}

fn emit_experiment(
    cfg: &ExperimentConfig,
    csv: Option<String>,
    summary: serde_json::Value,
) -> Result<()> {
    match &cfg.out {
        Some(prefix) => {
            let mut wrote = Vec::new();
            if matches!(cfg.format, OutputFormat::Csv | OutputFormat::Both) {
                if let Some(csv) = csv {
                    let path = prefix.with_extension("csv");
                    write_output(&path, &csv)?;
                    wrote.push(path.display().to_string());
                }
            }
            if matches!(cfg.format, OutputFormat::Json | OutputFormat::Both) {
                let path = prefix.with_extension("json");
                write_output(&path, &(serde_json::to_string_pretty(&summary).unwrap() + "\n"))?;
                wrote.push(path.display().to_string());
            }
            println!("wrote {}", wrote.join(", "));
            Ok(())
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Norm { set, signal } => {
            let set = set.build()?;
            let z = read_signal(&set, &signal)?;
            println!("{}", set.norm(&z)?);
            Ok(())
        }
        Command::Tail { set, signal, s } => {
            let set = set.build()?;
            let z = read_signal(&set, &signal)?;
            let t = set.tail(&z, s)?;
            let doc = serde_json::json!({
                "value": t.value,
                "exact": t.exact,
                "terms": t.minimizer.terms(),
                "coefficient_mass": t.minimizer.coefficient_mass(),
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            Ok(())
        }
        Command::Solve { set, operator, y, eps, out } => {
            let set = set.build()?;
            let op = MeasurementOperator::new(read_matrix_csv(&operator)?)?;
            let y = read_vector_csv(&y)?;
            let opts = SolverOptions { eps, ..SolverOptions::default() };
            let r = solve_min_atomic(&set, &op, &y, &opts)?;
            println!("{}", serde_json::to_string_pretty(&r.report()).unwrap());
            if let Some(path) = out {
                let flat = r.z_hat.flat();
                let m = nalgebra::DMatrix::from_fn(1, flat.len(), |_, j| flat[j]);
                atomic_recovery::io::write_matrix_csv(&path, &m)?;
            }
            Ok(())
        }
        Command::Certify { set, kind, operator, s, rho_target, trials, seed, out } => {
            let set = set.build()?;
            let opts = CertifyOptions { seed, samples: trials, ..CertifyOptions::default() };
            let need_op = || -> Result<MeasurementOperator> {
                let path = operator
                    .as_ref()
                    .ok_or_else(|| Error::Config("this certificate needs --operator".into()))?;
                MeasurementOperator::new(read_matrix_csv(path)?)
            };
            let doc = match kind.as_str() {
                "plain" => check_plain_nsp(&set, &need_op()?, s, &opts)?.to_json(),
                "stable" => stable_rho(&set, &need_op()?, s, &opts)?.to_json(),
                "strong" => strong_constant(&set, &need_op()?, s, &opts)?.to_json(),
                "robust" => {
                    let rt = rho_target
                        .ok_or_else(|| Error::Config("robust needs --rho-target".into()))?;
                    robust_params(&set, &need_op()?, s, rt, &opts)?.to_json()
                }
                "splittable" => {
                    let r = check_splittable(&set, s, trials, seed)?;
                    serde_json::json!({
                        "property": r.property, "s": r.s, "verdict": r.verdict,
                        "trials": r.trials, "seed": r.seed, "margin": r.margin,
                    })
                }
                "s-even" => {
                    let r = check_s_even(&set, s, trials, seed)?;
                    serde_json::json!({
                        "property": r.property, "s": r.s, "verdict": r.verdict,
                        "trials": r.trials, "seed": r.seed, "margin": r.margin,
                    })
                }
                other => return Err(Error::Config(format!("unknown certificate kind `{other}`"))),
            };
            print_or_write(out.as_deref(), &doc)
        }
        Command::Width { set, rho, s, samples, seed, ensemble, m, workers } => {
            let set = set.build()?;
            let par = par_of(workers);
            let estimate = match ensemble {
                None => gaussian_width(&set, rho, s, samples, seed, par)?,
                Some(name) => {
                    let ens = ensemble_of(&name, seed)?;
                    let target = if rho == 0.0 {
                        WidthTarget::FullSphere { dim: set.ambient_dim() }
                    } else {
                        WidthTarget::SRho { set: &set, rho, s }
                    };
                    empirical_width(&ens, &target, m, samples, par)?
                }
            };
            println!("{}", serde_json::to_string_pretty(&estimate).unwrap());
            Ok(())
        }
        Command::Mendelson { set, rho, s, m, xi_frac, t, trials, seed, ensemble, workers } => {
            let set = set.build()?;
            let ens = ensemble_of(&ensemble, seed)?;
            let params = estimate_params(&ens, set.ambient_dim(), 10_000)?;
            let xi = params.alpha * xi_frac;
            let report =
                mendelson_check(&ens, &set, rho, s, m, xi, t, trials, par_of(workers))?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            Ok(())
        }
        Command::Phase { config, overrides } => {
            let cfg = load_config(&config, ExperimentKind::PhaseTransition, &overrides)?;
            let grid = run_phase_transition(&cfg)?;
            let csv = trials_to_csv(&grid.records);
            let summary = grid.summary_json(cfg.echo());
            emit_experiment(&cfg, Some(csv), summary)
        }
        Command::VerifyBounds { config, overrides } => {
            let cfg = load_config(&config, ExperimentKind::BoundVerification, &overrides)?;
            let report = run_bound_verification(&cfg)?;
            let csv = bound_trials_to_csv(&report.records);
            let mut summary = serde_json::to_value(&report).expect("serializable");
            summary["config"] = cfg.echo();
            emit_experiment(&cfg, Some(csv), summary)
        }
        Command::MinMeasure { config, overrides } => {
            let cfg = load_config(&config, ExperimentKind::MinMeasurement, &overrides)?;
            let report = run_min_measurement_study(&cfg)?;
            let mut summary = serde_json::to_value(&report).expect("serializable");
            summary["config"] = cfg.echo();
            emit_experiment(&cfg, None, summary)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
