//! Exact equality-constrained l1 minimization by basic-solution
//! enumeration. The minimum of `|x|_1` over an affine set `Fx = z` is
//! attained at a basic solution whose support has linearly independent
//! columns, so enumerating supports of size at most `rank(F)` and
//! keeping the exactly-feasible candidates finds the global optimum.
//! Only viable for small systems; callers fall back to ADMM beyond
//! `max_candidates`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{binomial, for_each_combination, lstsq, spectrum};

/// Default cap on enumerated supports.
pub const DEFAULT_MAX_CANDIDATES: usize = 200_000;

const FEAS_TOL: f64 = 1e-9;

/// Number of supports `min_l1_equality` would enumerate for an
/// `m x n` system of the given rank.
pub fn enumeration_cost(n: usize, rank: usize) -> usize {
    let mut total = 0usize;
    for k in 1..=rank.min(n) {
        total = total.saturating_add(binomial(n, k));
    }
    total
}

/// Globally minimize `|x|_1` subject to `Fx = z`.
///
/// Returns the minimizer and its objective. Errors when the
/// enumeration budget is exceeded or the system is infeasible.
pub fn min_l1_equality(
    f: &DMatrix<f64>,
    z: &DVector<f64>,
    max_candidates: usize,
) -> Result<(DVector<f64>, f64)> {
    let n = f.ncols();
    if f.nrows() != z.len() {
        return Err(Error::DimensionMismatch { expected: f.nrows(), got: z.len() });
    }
    let zscale = z.norm();
    if zscale == 0.0 {
        return Ok((DVector::zeros(n), 0.0));
    }
    let sp = spectrum(f)?;
    let rank = sp.rank;
    if enumeration_cost(n, rank) > max_candidates {
        return Err(Error::InvalidArgument(format!(
            "enumeration budget exceeded: {} supports > {max_candidates}",
            enumeration_cost(n, rank)
        )));
    }
    // z must lie in the range of F.
    let residual = (f * lstsq(f, z) - z).norm();
    if residual > FEAS_TOL * (1.0 + zscale) {
        return Err(Error::Infeasible(format!(
            "z outside range(F): least-squares residual {residual:.3e}"
        )));
    }

    let mut best: Option<(f64, DVector<f64>)> = None;
    for k in 1..=rank.min(n) {
        for_each_combination(n, k, |support| {
            let sub = f.select_columns(support.iter());
            let xs = lstsq(&sub, z);
            let res = (&sub * &xs - z).norm();
            if res <= FEAS_TOL * (1.0 + zscale) {
                let cost: f64 = xs.iter().map(|c| c.abs()).sum();
                if best.as_ref().map_or(true, |(b, _)| cost < *b - 0.0) {
                    let mut x = DVector::zeros(n);
                    for (slot, &j) in support.iter().enumerate() {
                        x[j] = xs[slot];
                    }
                    best = Some((cost, x));
                }
            }
            true
        });
    }
    match best {
        Some((cost, x)) => Ok((x, cost)),
        None => Err(Error::Infeasible("no feasible basic solution found".into())),
    }
}

/// Brute-force oracle for `min |x|_1 s.t. Ax = y` (test instrumentation,
/// ambient dimension capped at 14).
pub fn exhaustive_l1_oracle(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if a.ncols() > 14 {
        return Err(Error::InvalidArgument(format!(
            "exhaustive oracle limited to d <= 14, got {}",
            a.ncols()
        )));
    }
    let (x, _) = min_l1_equality(a, y, usize::MAX)?;
    Ok(x)
}
