//! Batch experiment harness: reproducible phase-transition grids,
//! bound-verification studies and minimum-measurement sweeps, with
//! deterministic CSV/JSON emission.
//!
//! Reproducibility contract: every trial derives its randomness from
//! `base seed + flat trial index` (ChaCha streams), results are
//! assembled in index order after the parallel map, and CSV output
//! contains no timing fields — identical config and seed give
//! byte-identical CSV for any worker count.

mod run;

pub use run::{
    bound_trials_to_csv, run_bound_verification, run_min_measurement_study,
    run_phase_transition, BoundReport, BoundTrialRecord, MinMeasureReport, MinMeasureRow,
    BOUND_CSV_HEADER,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{parse_config, AtomicSetSpec};
use crate::measure::{Ensemble, EnsembleKind};

/// Which study to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExperimentKind {
    PhaseTransition,
    BoundVerification,
    MinMeasurement,
    MendelsonCheck,
}

/// How test signals are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SignalModel {
    /// Exactly s-sparse: uniform atoms, standard normal coefficients.
    Sparse,
    /// Full-support with power-law decaying coefficient magnitudes.
    Compressible { decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub set: AtomicSetSpec,
    pub ensemble: Ensemble,
    pub m_grid: Vec<usize>,
    pub s_grid: Vec<usize>,
    pub trials: usize,
    pub eps: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub workers: usize,
    pub success_tol: f64,
    pub signal: SignalModel,
    pub operator_file: Option<PathBuf>,
    pub rho_target: Option<f64>,
    /// Operators certified per below-bound cell in the
    /// minimum-measurement study.
    pub cert_operators: usize,
    /// Use the dimension-based constants (sqrt(N), sqrt(n1 n2)) in
    /// bound evaluation instead of the computed equivalence constant.
    pub nominal_constant: bool,
    /// Iteration cap handed to the solver.
    pub solver_max_iter: usize,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind, set: AtomicSetSpec) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            set,
            ensemble: Ensemble::gaussian(0),
            m_grid: vec![],
            s_grid: vec![1],
            trials: 50,
            eps: 0.0,
            seed: 0,
            out: None,
            format: OutputFormat::Both,
            workers: 0,
            success_tol: 1e-4,
            signal: SignalModel::Sparse,
            operator_file: None,
            rho_target: None,
            cert_operators: 100,
            nominal_constant: false,
            solver_max_iter: 50_000,
        }
    }

    /// Load from a config file; validates that referenced files exist.
    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        let map = parse_config(&text)?;
        let cfg = Self::from_map(&map)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<ExperimentConfig> {
        let kind = match map.get("experiment").map(String::as_str) {
            Some("phase") | Some("phase_transition") => ExperimentKind::PhaseTransition,
            Some("verify-bounds") | Some("bound_verification") => {
                ExperimentKind::BoundVerification
            }
            Some("min-measure") | Some("min_measurement") => ExperimentKind::MinMeasurement,
            Some("mendelson") => ExperimentKind::MendelsonCheck,
            Some(other) => return Err(Error::Config(format!("unknown experiment `{other}`"))),
            None => return Err(Error::Config("missing key `experiment`".into())),
        };
        let set = AtomicSetSpec::from_config(map)?;
        let mut cfg = ExperimentConfig::defaults(kind, set);
        cfg.apply_overrides(map)?;
        Ok(cfg)
    }

    /// Apply `key = value` overrides (same keys as the config file).
    pub fn apply_overrides(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in map {
            match k.as_str() {
                "experiment" | "set.kind" | "set.dim" | "set.rows" | "set.cols"
                | "set.atoms" | "set.atoms_file" => {} // handled at construction
                "ensemble" => {
                    self.ensemble.kind = match v.as_str() {
                        "gaussian" => EnsembleKind::Gaussian,
                        "rademacher" => EnsembleKind::Rademacher,
                        "uniform" => EnsembleKind::UniformScaled,
                        other => {
                            return Err(Error::Config(format!("unknown ensemble `{other}`")))
                        }
                    }
                }
                "scale" => self.ensemble.scale = parse_f64(k, v)?,
                "m" => self.m_grid = parse_grid(v)?,
                "s" => self.s_grid = parse_grid(v)?,
                "trials" => self.trials = parse_usize(k, v)?,
                "eps" => self.eps = parse_f64(k, v)?,
                "seed" => {
                    self.seed = v
                        .parse()
                        .map_err(|_| Error::Config(format!("bad integer for `{k}`")))?;
                    self.ensemble.seed = self.seed;
                }
                "out" => self.out = Some(PathBuf::from(v)),
                "format" => {
                    self.format = match v.as_str() {
                        "csv" => OutputFormat::Csv,
                        "json" => OutputFormat::Json,
                        "both" => OutputFormat::Both,
                        other => return Err(Error::Config(format!("unknown format `{other}`"))),
                    }
                }
                "workers" => self.workers = parse_usize(k, v)?,
                "success_tol" => self.success_tol = parse_f64(k, v)?,
                "signal" => {
                    self.signal = match v.as_str() {
                        "sparse" => SignalModel::Sparse,
                        "compressible" => SignalModel::Compressible { decay: 1.5 },
                        other => return Err(Error::Config(format!("unknown signal `{other}`"))),
                    }
                }
                "decay" => {
                    let d = parse_f64(k, v)?;
                    self.signal = SignalModel::Compressible { decay: d };
                }
                "operator_file" => self.operator_file = Some(PathBuf::from(v)),
                "rho_target" => self.rho_target = Some(parse_f64(k, v)?),
                "cert_operators" => self.cert_operators = parse_usize(k, v)?,
                "max_iter" => self.solver_max_iter = parse_usize(k, v)?,
                "nominal_constant" => {
                    self.nominal_constant = v
                        .parse()
                        .map_err(|_| Error::Config(format!("bad bool for `{k}`")))?
                }
                other => return Err(Error::Config(format!("unknown config key `{other}`"))),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.s_grid.is_empty() {
            return Err(Error::Config("s grid must be nonempty".into()));
        }
        if self.kind != ExperimentKind::BoundVerification && self.m_grid.is_empty() {
            return Err(Error::Config("m grid must be nonempty".into()));
        }
        if self.eps < 0.0 {
            return Err(Error::Config("eps must be nonnegative".into()));
        }
        if let AtomicSetSpec::FrameFile { path } = &self.set {
            if !path.exists() {
                return Err(Error::Config(format!("atoms file not found: {}", path.display())));
            }
        }
        if let Some(p) = &self.operator_file {
            if !p.exists() {
                return Err(Error::Config(format!("operator file not found: {}", p.display())));
            }
        }
        Ok(())
    }

    /// Echo for report metadata (deterministic key order).
    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": format!("{:?}", self.kind),
            "set": self.set.to_config().trim().replace('\n', "; "),
            "ensemble": self.ensemble,
            "m": self.m_grid,
            "s": self.s_grid,
            "trials": self.trials,
            "eps": self.eps,
            "seed": self.seed,
            "success_tol": self.success_tol,
            "signal": self.signal,
            "rho_target": self.rho_target,
            "nominal_constant": self.nominal_constant,
        })
    }
}

fn parse_f64(k: &str, v: &str) -> Result<f64> {
    v.parse().map_err(|_| Error::Config(format!("bad number for `{k}`")))
}

fn parse_usize(k: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| Error::Config(format!("bad integer for `{k}`")))
}

/// Grid syntax: `a,b,c` or `lo..hi` (inclusive) or `lo..hi..step`.
pub fn parse_grid(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if text.contains("..") {
        let parts: Vec<&str> = text.split("..").collect();
        let bad = || Error::Config(format!("bad grid `{text}`"));
        let lo: usize = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: usize = parts.get(1).ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let step: usize = match parts.get(2) {
            Some(s) => s.trim().parse().map_err(|_| bad())?,
            None => 1,
        };
        if step == 0 || hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    let vals: std::result::Result<Vec<usize>, _> =
        text.split(',').map(|t| t.trim().parse::<usize>()).collect();
    let vals = vals.map_err(|_| Error::Config(format!("bad grid `{text}`")))?;
    if vals.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    Ok(vals)
}

/// One recovery trial within a grid cell. Wall time is tracked for
/// aggregate reporting only and never serialized per record, keeping
/// CSV output byte-deterministic.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub m: usize,
    pub s: usize,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub err_l2: f64,
    pub err_atomic: f64,
    pub tail: f64,
    pub bound: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub wall_ms: f64,
}

pub const TRIAL_CSV_HEADER: &str =
    "m,s,trial,seed,success,err_l2,err_atomic,tail,bound,iterations,converged";

pub fn trials_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRIAL_CSV_HEADER);
    out.push('\n');
    for r in records {
        let bound = r.bound.map(|b| format!("{b}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.m,
            r.s,
            r.trial,
            r.seed,
            r.success,
            r.err_l2,
            r.err_atomic,
            r.tail,
            bound,
            r.iterations,
            r.converged
        );
    }
    out
}

/// Aggregated success rates per (m, s) cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub m: usize,
    pub s: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub nonconverged: usize,
}

/// The phase-transition surface plus the measurement lower-bound
/// overlay values per sparsity level.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseGrid {
    pub schema_version: u32,
    pub cells: Vec<CellSummary>,
    /// Lower-bound curve overlay: `(s, bound)`; absent where the
    /// bound's preconditions fail (s <= 2).
    pub overlay: Vec<(usize, Option<f64>)>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
    pub total_runtime_ms: f64,
}

impl PhaseGrid {
    pub fn summary_json(&self, config_echo: serde_json::Value) -> serde_json::Value {
        serde_json::json!({
            "schema_version": self.schema_version,
            "config": config_echo,
            "cells": self.cells,
            "overlay": self.overlay,
            "total_runtime_ms": self.total_runtime_ms,
        })
    }
}

/// Write a report string, surfacing path context on failure.
pub fn write_output(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() && !parent.exists() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::Io { path: parent.display().to_string(), source: e })?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}
