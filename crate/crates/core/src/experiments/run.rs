//! The three studies: phase transitions, bound verification, and the
//! minimum-measurement sweep.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::atoms::{AtomicSet, Signal, SparseDecomposition};
use crate::error::{Error, Result};
use crate::io::read_matrix_csv;
use crate::nsp::{
    check_plain_nsp, check_s_even, min_measurement_bound, robust_params, stable_rho,
    strong_constant, theoretical_bound, BoundConstants, BoundKind, CertifyOptions, Holds, Method,
    Verdict,
};
use crate::par::Parallelism;
use crate::solvers::{solve_min_atomic, MeasurementOperator, SolverOptions};

use super::{
    CellSummary, ExperimentConfig, PhaseGrid, SignalModel, TrialRecord,
};

fn parallelism(cfg: &ExperimentConfig) -> Parallelism {
    if cfg.workers == 0 {
        Parallelism::default()
    } else {
        Parallelism::with_workers(cfg.workers)
    }
}

fn draw_operator(cfg: &ExperimentConfig, m: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<MeasurementOperator> {
    let a = DMatrix::from_fn(m, d, |_, _| cfg.ensemble.entry(rng));
    MeasurementOperator::new(a)
}

fn draw_signal(
    set: &AtomicSet,
    model: SignalModel,
    s: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Signal> {
    match model {
        SignalModel::Sparse => Ok(set.sample_sparse(s, rng)?.0),
        SignalModel::Compressible { decay } => compressible_signal(set, decay, rng),
    }
}

/// Full-support signal with power-law coefficient magnitudes
/// `j^{-decay}` over a random atom order (random orthonormal factors
/// with decaying spectrum in the rank-one case).
fn compressible_signal(set: &AtomicSet, decay: f64, rng: &mut ChaCha8Rng) -> Result<Signal> {
    match set {
        AtomicSet::RankOne { rows, cols } => {
            let k = *rows.min(cols);
            let singulars: Vec<f64> = (1..=k).map(|j| (j as f64).powf(-decay)).collect();
            let (_, dec) = set.sample_sparse(k, rng)?;
            let SparseDecomposition::RankOne { left, right, .. } = dec else { unreachable!() };
            let dec = SparseDecomposition::RankOne { singulars, left, right };
            dec.assemble(set)
        }
        _ => {
            let n = set.atom_count().expect("finite atomic set");
            let mut order: Vec<usize> = (0..n).collect();
            // Fisher-Yates with the trial RNG
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            let indices: Vec<usize> = order;
            let coefficients: Vec<f64> = (1..=n)
                .map(|j| {
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    sign * (j as f64).powf(-decay)
                })
                .collect();
            let dec = SparseDecomposition::Atoms { indices, coefficients };
            dec.assemble(set)
        }
    }
}

/// Noise drawn uniformly on the eps-sphere (`|e|_2 = eps` exactly).
fn noise_on_sphere(m: usize, eps: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    if eps == 0.0 {
        return DVector::zeros(m);
    }
    loop {
        let e = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = e.norm();
        if n > 1e-12 {
            return e * (eps / n);
        }
    }
}

struct TrialOutput {
    record: TrialRecord,
}

fn recovery_trial(
    cfg: &ExperimentConfig,
    set: &AtomicSet,
    m: usize,
    s: usize,
    trial: usize,
    stream: u64,
) -> Result<TrialOutput> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let d = set.ambient_dim();
    let op = draw_operator(cfg, m, d, &mut rng)?;
    let z0 = draw_signal(set, cfg.signal, s, &mut rng)?;
    let e = noise_on_sphere(m, cfg.eps, &mut rng);
    let y = op.apply(&z0)? + e;
    let opts = SolverOptions {
        eps: cfg.eps,
        max_iter: cfg.solver_max_iter,
        ..SolverOptions::default()
    };
    let r = solve_min_atomic(set, &op, &y, &opts)?;
    let diff = Signal::reshape_for(set, r.z_hat.flat() - z0.flat())?;
    let err_l2 = diff.norm2();
    let err_atomic = set.norm(&diff)?;
    let tail = set.tail(&z0, s)?.value;
    let success = err_l2 <= cfg.success_tol * z0.norm2().max(1.0);
    Ok(TrialOutput {
        record: TrialRecord {
            m,
            s,
            trial,
            seed: stream,
            success,
            err_l2,
            err_atomic,
            tail,
            bound: None,
            iterations: r.iterations,
            converged: r.converged,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// Sweep the (m, s) grid with independent recovery trials per cell.
/// Cells where more than 10% of solves fail to converge abort the run.
pub fn run_phase_transition(cfg: &ExperimentConfig) -> Result<PhaseGrid> {
    cfg.validate()?;
    let t0 = Instant::now();
    let set = cfg.set.build()?;
    let par = parallelism(cfg);
    let cells: Vec<(usize, usize)> = cfg
        .m_grid
        .iter()
        .flat_map(|&m| cfg.s_grid.iter().map(move |&s| (m, s)))
        .collect();
    let total = cells.len() * cfg.trials;
    let results: Vec<Result<TrialOutput>> = par.map(total, |flat| {
        let cell = flat / cfg.trials;
        let trial = flat % cfg.trials;
        let (m, s) = cells[cell];
        recovery_trial(cfg, &set, m, s, trial, flat as u64)
    });

    let mut records = Vec::with_capacity(total);
    for r in results {
        records.push(r?.record);
    }

    let mut summaries = Vec::with_capacity(cells.len());
    for (ci, &(m, s)) in cells.iter().enumerate() {
        let slice = &records[ci * cfg.trials..(ci + 1) * cfg.trials];
        let successes = slice.iter().filter(|r| r.success).count();
        let nonconverged = slice.iter().filter(|r| !r.converged).count();
        if nonconverged * 10 > cfg.trials {
            return Err(Error::SolverBudget(format!(
                "cell (m = {m}, s = {s}): {nonconverged}/{} solves did not converge",
                cfg.trials
            )));
        }
        summaries.push(CellSummary {
            m,
            s,
            trials: cfg.trials,
            successes,
            rate: successes as f64 / cfg.trials as f64,
            nonconverged,
        });
    }

    let overlay: Vec<(usize, Option<f64>)> = cfg
        .s_grid
        .iter()
        .map(|&s| {
            let bound = set
                .atom_count()
                .and_then(|n| min_measurement_bound(s, n).ok());
            (s, bound)
        })
        .collect();

    Ok(PhaseGrid {
        schema_version: 1,
        cells: summaries,
        overlay,
        records,
        total_runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
    })
}

/// One noisy trial of a bound-verification study.
#[derive(Debug, Clone, Serialize)]
pub struct BoundTrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub eps: f64,
    pub err_l2: f64,
    pub err_atomic: f64,
    pub tail: f64,
    pub stable_bound: Option<f64>,
    pub robust_bound: Option<f64>,
    pub strong_bound: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub const BOUND_CSV_HEADER: &str =
    "trial,seed,eps,err_l2,err_atomic,tail,stable_bound,robust_bound,strong_bound,iterations,converged";

pub fn bound_trials_to_csv(records: &[BoundTrialRecord]) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    out.push_str(BOUND_CSV_HEADER);
    out.push('\n');
    let fmt = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.seed,
            r.eps,
            r.err_l2,
            r.err_atomic,
            r.tail,
            fmt(r.stable_bound),
            fmt(r.robust_bound),
            fmt(r.strong_bound),
            r.iterations,
            r.converged
        );
    }
    out
}

/// Outcome of a bound-verification study.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub schema_version: u32,
    /// True when exact certificates back the assertions; otherwise the
    /// report is observational.
    pub asserted: bool,
    pub refusal: Option<String>,
    pub rho: Option<f64>,
    pub rho_target: Option<f64>,
    pub tau: Option<f64>,
    pub c: Option<f64>,
    pub violations_stable: usize,
    pub violations_robust: usize,
    pub violations_strong: usize,
    /// Smallest `bound - error` slack observed per bound kind.
    pub min_margin_stable: Option<f64>,
    pub min_margin_robust: Option<f64>,
    pub min_margin_strong: Option<f64>,
    pub trials: usize,
    #[serde(skip)]
    pub records: Vec<BoundTrialRecord>,
    pub total_runtime_ms: f64,
}

/// Relative slack for violation counting, with an absolute floor at
/// the solver's designed accuracy so that zero bounds on exactly
/// recovered signals do not count numerical dust as violations.
fn violates(err: f64, bound: f64) -> bool {
    err > bound * (1.0 + 1e-6) + 1e-6
}

/// Verify the stable/robust/strong error bounds on noisy recoveries of
/// a fixed instance. Requires exact certificates to assert; otherwise
/// emits an observational report.
pub fn run_bound_verification(cfg: &ExperimentConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let t0 = Instant::now();
    let set = cfg.set.build()?;
    let d = set.ambient_dim();
    let s = cfg.s_grid[0];
    let par = parallelism(cfg);

    // the instance operator: from file, or one seeded ensemble draw
    let op = match &cfg.operator_file {
        Some(path) => MeasurementOperator::new(read_matrix_csv(path)?)?,
        None => {
            let m = *cfg.m_grid.first().ok_or_else(|| {
                Error::Config("bound verification needs `m` or `operator_file`".into())
            })?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0b0d);
            draw_operator(cfg, m, d, &mut rng)?
        }
    };
    if op.ambient_dim() != d {
        return Err(Error::Config(format!(
            "operator is {}-dimensional, set is {d}-dimensional",
            op.ambient_dim()
        )));
    }

    let copts = CertifyOptions { seed: cfg.seed, ..CertifyOptions::default() };
    let stable = stable_rho(&set, &op, s, &copts)?;
    let strong = strong_constant(&set, &op, s, &copts)?;
    let rho = stable.rho.filter(|r| r.is_finite());
    let rho_exact = stable.method == Method::ExactEnumeration && stable.holds == Holds::Yes;
    let c_exact = strong.method == Method::ExactEnumeration
        && strong.holds == Holds::Yes
        && strong.c.map_or(false, |c| c.is_finite());
    // splittability backs the stable/robust bounds
    let splittable = matches!(set, AtomicSet::CanonicalBasis { .. } | AtomicSet::RankOne { .. });

    let rho_target = cfg.rho_target.or_else(|| rho.map(|r| (1.0 + r) / 2.0)).filter(|r| *r < 1.0);
    let robust = match rho_target {
        Some(rt) => Some(robust_params(&set, &op, s, rt, &copts)?),
        None => None,
    };
    let tau = robust.as_ref().and_then(|c| c.tau).filter(|t| t.is_finite());

    let assert_stable = rho_exact && splittable && rho.map_or(false, |r| r < 1.0);
    let assert_robust = assert_stable && tau.is_some();
    let assert_strong = c_exact;
    let asserted = assert_stable || assert_strong;
    let refusal = if asserted {
        None
    } else {
        Some("no exact certificate available; observational report only".to_string())
    };

    let stable_constants = BoundConstants { rho, ..Default::default() };
    let robust_constants = BoundConstants { rho: rho_target, tau, ..Default::default() };
    let strong_constants = BoundConstants { c: strong.c, ..Default::default() };

    let records: Vec<Result<BoundTrialRecord>> = par.map(cfg.trials, |trial| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(trial as u64);
        let z0 = draw_signal(&set, cfg.signal, s, &mut rng)?;
        let e = noise_on_sphere(op.measurements(), cfg.eps, &mut rng);
        let y = op.apply(&z0)? + e;
        let opts = SolverOptions {
            eps: cfg.eps,
            max_iter: cfg.solver_max_iter,
            ..SolverOptions::default()
        };
        let r = solve_min_atomic(&set, &op, &y, &opts)?;
        let diff = Signal::reshape_for(&set, r.z_hat.flat() - z0.flat())?;
        let err_l2 = diff.norm2();
        let err_atomic = set.norm(&diff)?;
        let tail = set.tail(&z0, s)?.value;
        let stable_bound = if assert_stable {
            Some(theoretical_bound(
                BoundKind::Stable, &set, &op, cfg.eps, tail, &stable_constants,
                cfg.nominal_constant,
            )?)
        } else {
            None
        };
        let robust_bound = if assert_robust {
            Some(theoretical_bound(
                BoundKind::Robust, &set, &op, cfg.eps, tail, &robust_constants,
                cfg.nominal_constant,
            )?)
        } else {
            None
        };
        let strong_bound = if assert_strong {
            Some(theoretical_bound(
                BoundKind::Strong, &set, &op, cfg.eps, tail, &strong_constants,
                cfg.nominal_constant,
            )?)
        } else {
            None
        };
        Ok(BoundTrialRecord {
            trial,
            seed: trial as u64,
            eps: cfg.eps,
            err_l2,
            err_atomic,
            tail,
            stable_bound,
            robust_bound,
            strong_bound,
            iterations: r.iterations,
            converged: r.converged,
        })
    });
    let records: Vec<BoundTrialRecord> = records.into_iter().collect::<Result<_>>()?;

    let mut report = BoundReport {
        schema_version: 1,
        asserted,
        refusal,
        rho,
        rho_target,
        tau,
        c: strong.c,
        violations_stable: 0,
        violations_robust: 0,
        violations_strong: 0,
        min_margin_stable: None,
        min_margin_robust: None,
        min_margin_strong: None,
        trials: cfg.trials,
        records: Vec::new(),
        total_runtime_ms: 0.0,
    };
    for r in &records {
        if let Some(b) = r.stable_bound {
            if violates(r.err_atomic, b) {
                report.violations_stable += 1;
            }
            let margin = b - r.err_atomic;
            report.min_margin_stable =
                Some(report.min_margin_stable.map_or(margin, |m| m.min(margin)));
        }
        if let Some(b) = r.robust_bound {
            if violates(r.err_atomic, b) {
                report.violations_robust += 1;
            }
            let margin = b - r.err_atomic;
            report.min_margin_robust =
                Some(report.min_margin_robust.map_or(margin, |m| m.min(margin)));
        }
        if let Some(b) = r.strong_bound {
            if violates(r.err_l2, b) {
                report.violations_strong += 1;
            }
            let margin = b - r.err_l2;
            report.min_margin_strong =
                Some(report.min_margin_strong.map_or(margin, |m| m.min(margin)));
        }
    }
    report.records = records;
    report.total_runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Per-m row of a minimum-measurement study.
#[derive(Debug, Clone, Serialize)]
pub struct MinMeasureRow {
    pub m: usize,
    pub below_bound: bool,
    pub success_rate: f64,
    pub certified: usize,
    pub nsp_holds: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinMeasureReport {
    pub schema_version: u32,
    pub s: usize,
    pub atoms: usize,
    pub bound: f64,
    /// Smallest m in the sweep with success rate >= 1/2.
    pub m_star: Option<usize>,
    pub s_even_verdict: String,
    pub rows: Vec<MinMeasureRow>,
    pub total_runtime_ms: f64,
}

/// Sweep m against the measurement lower bound: recovery rates plus
/// exact plain-NSP certification of sampled operators below the bound.
pub fn run_min_measurement_study(cfg: &ExperimentConfig) -> Result<MinMeasureReport> {
    cfg.validate()?;
    let t0 = Instant::now();
    let set = cfg.set.build()?;
    let s = cfg.s_grid[0];
    if s <= 2 {
        return Err(Error::Refused(format!(
            "the measurement lower bound requires s > 2, got s = {s}"
        )));
    }
    let Some(n_atoms) = set.atom_count() else {
        return Err(Error::Refused("the study needs a finite atomic set".into()));
    };
    let seven = check_s_even(&set, s, 5_000, cfg.seed)?;
    if seven.verdict == Verdict::Falsified {
        return Err(Error::Refused(format!(
            "atomic set is not {s}-even (sampling found a violation of {:.3e})",
            seven.margin
        )));
    }
    let bound = min_measurement_bound(s, n_atoms)?;
    let d = set.ambient_dim();
    let par = parallelism(cfg);

    let mut rows = Vec::with_capacity(cfg.m_grid.len());
    for (mi, &m) in cfg.m_grid.iter().enumerate() {
        let below = (m as f64) < bound;
        // recovery rate
        let outcomes: Vec<Result<bool>> = par.map(cfg.trials, |trial| {
            let stream = (mi * cfg.trials + trial) as u64;
            let out = recovery_trial(cfg, &set, m, s, trial, stream)?;
            Ok(out.record.success)
        });
        let mut successes = 0;
        for o in outcomes {
            if o? {
                successes += 1;
            }
        }
        // certification: every sampled operator below the bound must
        // fail the exact plain NSP; above it we certify a few for the
        // report
        let cert_count = if below { cfg.cert_operators } else { cfg.cert_operators.min(10) };
        let verdicts: Vec<Result<bool>> = par.map(cert_count, |k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xce27);
            rng.set_stream((mi * cfg.cert_operators + k) as u64);
            let op = draw_operator(cfg, m, d, &mut rng)?;
            let copts = CertifyOptions { seed: cfg.seed, ..CertifyOptions::default() };
            let cert = check_plain_nsp(&set, &op, s, &copts)?;
            Ok(cert.holds == Holds::Yes && cert.method == Method::ExactEnumeration)
        });
        let mut nsp_holds = 0;
        for v in verdicts {
            if v? {
                nsp_holds += 1;
            }
        }
        rows.push(MinMeasureRow {
            m,
            below_bound: below,
            success_rate: successes as f64 / cfg.trials as f64,
            certified: cert_count,
            nsp_holds,
        });
    }

    let m_star = rows.iter().find(|r| r.success_rate >= 0.5).map(|r| r.m);
    Ok(MinMeasureReport {
        schema_version: 1,
        s,
        atoms: n_atoms,
        bound,
        m_star,
        s_even_verdict: format!("{:?}", seven.verdict),
        rows,
        total_runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
    })
}
