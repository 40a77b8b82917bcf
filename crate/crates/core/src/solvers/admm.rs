//! ADMM splitting solver for `min h(x) s.t. |Ax - y|_2 <= eps` where
//! `h` is the l1 norm or the nuclear norm of a matrix view of `x`.
//!
//! Splitting: `z1 = x` carries the prox of `h`, `z2 = Ax` carries the
//! projection onto the measurement ball. The x-update solves the SPD
//! system `(I + A^T A) x = (z1 - u1) + A^T (z2 - u2)`, factored once.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::solvers::prox::{project_ball, soft_threshold, sv_threshold};
use crate::solvers::SolverOptions;

#[derive(Debug, Clone, Copy)]
pub enum ProxKind {
    L1,
    Nuclear { rows: usize, cols: usize },
}

#[derive(Debug, Clone)]
pub struct AdmmOutput {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub constraint_residual: f64,
}

fn apply_prox(v: &DVector<f64>, tau: f64, kind: ProxKind) -> Result<DVector<f64>> {
    match kind {
        ProxKind::L1 => Ok(soft_threshold(v, tau)),
        ProxKind::Nuclear { rows, cols } => {
            let m = DMatrix::from_column_slice(rows, cols, v.as_slice());
            let t = sv_threshold(&m, tau)?;
            Ok(DVector::from_column_slice(t.as_slice()))
        }
    }
}

fn objective_of(v: &DVector<f64>, kind: ProxKind) -> f64 {
    match kind {
        ProxKind::L1 => v.iter().map(|c| c.abs()).sum(),
        ProxKind::Nuclear { rows, cols } => {
            let m = DMatrix::from_column_slice(rows, cols, v.as_slice());
            m.svd(false, false).singular_values.iter().sum()
        }
    }
}

/// Solve `min h(x) s.t. |Ax - y|_2 <= eps`.
pub fn admm_ball_constrained(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    kind: ProxKind,
    opts: &SolverOptions,
) -> Result<AdmmOutput> {
    let (m, d) = (a.nrows(), a.ncols());
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: y.len() });
    }
    if opts.eps < 0.0 {
        return Err(Error::InvalidArgument("eps must be nonnegative".into()));
    }
    // Equality-constrained problems must be feasible.
    if opts.eps == 0.0 {
        let res = (a * lstsq(a, y) - y).norm();
        if res > 1e-10 * (1.0 + y.norm()) {
            return Err(Error::Infeasible(format!(
                "y outside range(A) with eps = 0 (residual {res:.3e})"
            )));
        }
    }

    let rho = opts.rho;
    let alpha = opts.over_relax;
    let tau = 1.0 / rho;
    let gram = DMatrix::identity(d, d) + a.transpose() * a;
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::InvalidArgument("I + A^T A not SPD (non-finite input?)".into()))?;

    let mut z1 = DVector::zeros(d);
    let mut z2 = DVector::zeros(m);
    let mut u1 = DVector::zeros(d);
    let mut u2 = DVector::zeros(m);

    let mut converged = false;
    let mut iters = 0;
    for it in 0..opts.max_iter {
        iters = it + 1;
        // x-update
        let rhs = (&z1 - &u1) + a.transpose() * (&z2 - &u2);
        let x = chol.solve(&rhs);
        let ax = a * &x;

        // over-relaxation
        let v1 = &x * alpha + &z1 * (1.0 - alpha);
        let v2 = &ax * alpha + &z2 * (1.0 - alpha);

        let z1_old = z1.clone();
        let z2_old = z2.clone();
        z1 = apply_prox(&(&v1 + &u1), tau, kind)?;
        z2 = project_ball(&(&v2 + &u2), y, opts.eps);
        u1 += &v1 - &z1;
        u2 += &v2 - &z2;

        // residuals
        let r_pri = ((&x - &z1).norm_squared() + (&ax - &z2).norm_squared()).sqrt();
        let s_dual = rho * ((&z1 - &z1_old) + a.transpose() * (&z2 - &z2_old)).norm();
        let pri_scale = (x.norm_squared() + ax.norm_squared())
            .sqrt()
            .max((z1.norm_squared() + z2.norm_squared()).sqrt());
        let dual_scale = rho * (&u1 + a.transpose() * &u2).norm();
        let eps_pri = ((d + m) as f64).sqrt() * opts.tol_abs + opts.tol_rel * pri_scale;
        let eps_dual = (d as f64).sqrt() * opts.tol_abs + opts.tol_rel * dual_scale;
        if r_pri <= eps_pri && s_dual <= eps_dual {
            // the returned iterate is z1: require it to satisfy the
            // measurement constraint with margin before stopping
            if (a * &z1 - y).norm() <= opts.eps + 1e-7 {
                converged = true;
                break;
            }
        }
    }

    let constraint_residual = (a * &z1 - y).norm();
    let objective = objective_of(&z1, kind);
    Ok(AdmmOutput { x: z1, objective, iterations: iters, converged, constraint_residual })
}
