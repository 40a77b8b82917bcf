//! Convex solvers for the constrained atomic-norm minimization
//! programs, in all three specializations: basis pursuit for the
//! canonical basis, l1 synthesis through the composed matrix for
//! frames, and nuclear norm minimization for matrices.

pub mod admm;
pub mod exact;
pub mod prox;

pub use exact::exhaustive_l1_oracle;
pub use prox::{soft_threshold, sv_threshold};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::atoms::{AtomicSet, Signal};
use crate::error::{Error, Result};
use crate::linalg::{spectrum, Spectrum};

/// The linear measurement map `A` as an `m x d` matrix over flattened
/// signals, with cached spectral data.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    matrix: DMatrix<f64>,
    spectrum: Spectrum,
}

impl MeasurementOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<MeasurementOperator> {
        let spectrum = spectrum(&matrix)?;
        Ok(MeasurementOperator { matrix, spectrum })
    }

    pub fn identity(d: usize) -> MeasurementOperator {
        MeasurementOperator::new(DMatrix::identity(d, d)).expect("identity is full rank")
    }

    pub fn measurements(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Smallest nonzero singular value.
    pub fn nu(&self) -> f64 {
        self.spectrum.nu
    }

    pub fn rank(&self) -> usize {
        self.spectrum.rank
    }

    /// `d x k` orthonormal null-space basis (`k = d - rank`).
    pub fn null_space(&self) -> &DMatrix<f64> {
        &self.spectrum.null_space
    }

    pub fn null_dim(&self) -> usize {
        self.spectrum.null_space.ncols()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.spectrum.singular_values
    }

    pub fn apply_flat(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.matrix * z
    }

    pub fn apply(&self, z: &Signal) -> Result<DVector<f64>> {
        if z.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: z.dim() });
        }
        Ok(self.apply_flat(z.flat()))
    }
}

/// Tolerances and penalties for the splitting solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
    /// ADMM penalty parameter.
    pub rho: f64,
    /// Over-relaxation factor in (1, 2).
    pub over_relax: f64,
    /// Measurement noise radius (0 = equality constraints).
    pub eps: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_abs: 1e-8,
            tol_rel: 1e-6,
            max_iter: 50_000,
            rho: 1.0,
            over_relax: 1.6,
            eps: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn with_eps(eps: f64) -> SolverOptions {
        SolverOptions { eps, ..SolverOptions::default() }
    }
}

/// Outcome of one minimization.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub z_hat: Signal,
    /// Atomic norm attained at `z_hat`.
    pub objective: f64,
    /// `|A z_hat - y|_2`.
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Flat JSON-style report of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub objective: f64,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveResult {
    pub fn report(&self) -> SolveReport {
        SolveReport {
            objective: self.objective,
            constraint_residual: self.constraint_residual,
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

/// Solve `min |z|_W s.t. |Az - y|_2 <= eps`.
pub fn solve_min_atomic(
    set: &AtomicSet,
    op: &MeasurementOperator,
    y: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    if op.ambient_dim() != set.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: set.ambient_dim(), got: op.ambient_dim() });
    }
    if y.len() != op.measurements() {
        return Err(Error::DimensionMismatch { expected: op.measurements(), got: y.len() });
    }
    match set {
        AtomicSet::CanonicalBasis { .. } => {
            let out = admm::admm_ball_constrained(op.matrix(), y, admm::ProxKind::L1, opts)?;
            Ok(SolveResult {
                z_hat: Signal::vector(out.x),
                objective: out.objective,
                constraint_residual: out.constraint_residual,
                iterations: out.iterations,
                converged: out.converged,
            })
        }
        AtomicSet::FiniteFrame(frame) => {
            // l1 synthesis through the composed matrix A F.
            let composed = op.matrix() * frame.matrix();
            let out = admm::admm_ball_constrained(&composed, y, admm::ProxKind::L1, opts)?;
            let z = frame.matrix() * &out.x;
            let residual = (op.apply_flat(&z) - y).norm();
            Ok(SolveResult {
                z_hat: Signal::vector(z),
                objective: out.objective,
                constraint_residual: residual,
                iterations: out.iterations,
                converged: out.converged && residual <= opts.eps + 1e-6,
            })
        }
        AtomicSet::RankOne { rows, cols } => {
            let kind = admm::ProxKind::Nuclear { rows: *rows, cols: *cols };
            let out = admm::admm_ball_constrained(op.matrix(), y, kind, opts)?;
            let z = Signal::reshape_for(set, out.x)?;
            Ok(SolveResult {
                z_hat: z,
                objective: out.objective,
                constraint_residual: out.constraint_residual,
                iterations: out.iterations,
                converged: out.converged,
            })
        }
    }
}
