//! Best s-term approximation and the tail distance to the s-sparse set.
//!
//! Canonical basis: keep the s largest-magnitude coordinates (ties
//! broken by lowest index). Rank-one manifold: truncated SVD, tail is
//! the sum of the trailing singular values. Finite frame: exact
//! combinatorial search over supports T with |T| = s, each inner
//! problem `min |x_{T^c}|_1 s.t. Fx = z` reduced to an
//! equality-constrained l1 problem on the orthogonal complement of
//! range(F_T); beyond `max_supports` a greedy + local-swap heuristic
//! takes over and the result is flagged inexact.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{binomial, for_each_combination, lstsq, spectrum};
use crate::solvers::exact::min_l1_equality;

use super::{AtomicSet, Frame, Signal, SparseDecomposition, TailResult};

/// Controls for the combinatorial frame search.
#[derive(Debug, Clone, Copy)]
pub struct ApproxOptions {
    /// Support-enumeration budget for the frame case.
    pub max_supports: usize,
    /// Enumeration budget for each inner l1 problem.
    pub max_candidates: usize,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions { max_supports: 200_000, max_candidates: 200_000 }
    }
}

impl AtomicSet {
    /// Best s-term approximation of `z` (the minimizer of the tail).
    pub fn best_s_approx(&self, z: &Signal, s: usize) -> Result<SparseDecomposition> {
        Ok(self.tail(z, s)?.minimizer)
    }

    /// The tail `sigma_{W,s}(z)` together with an achieving minimizer.
    pub fn tail(&self, z: &Signal, s: usize) -> Result<TailResult> {
        self.tail_with(z, s, &ApproxOptions::default())
    }

    pub fn tail_with(&self, z: &Signal, s: usize, opts: &ApproxOptions) -> Result<TailResult> {
        if z.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: z.dim() });
        }
        if s == 0 || s > self.max_sparsity() {
            return Err(Error::SparsityOutOfRange { s, max: self.max_sparsity() });
        }
        match self {
            AtomicSet::CanonicalBasis { .. } => Ok(canonical_tail(z.flat(), s)),
            AtomicSet::RankOne { .. } => rank_one_tail(&z.as_matrix()?, s),
            AtomicSet::FiniteFrame(frame) => frame_tail(frame, z.flat(), s, opts),
        }
    }
}

fn canonical_tail(z: &DVector<f64>, s: usize) -> TailResult {
    let d = z.len();
    let mut order: Vec<usize> = (0..d).collect();
    // descending magnitude, ties broken by lowest index
    order.sort_by(|&a, &b| {
        z[b].abs().partial_cmp(&z[a].abs()).unwrap().then(a.cmp(&b))
    });
    let mut indices: Vec<usize> = order[..s].to_vec();
    indices.sort_unstable();
    let coefficients: Vec<f64> = indices.iter().map(|&i| z[i]).collect();
    let value: f64 = order[s..].iter().map(|&i| z[i].abs()).sum();
    TailResult {
        value,
        minimizer: SparseDecomposition::Atoms { indices, coefficients },
        exact: true,
    }
}

fn rank_one_tail(z: &DMatrix<f64>, s: usize) -> Result<TailResult> {
    let svd = z.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let k = svd.singular_values.len();
    let keep = s.min(k);
    let mut singulars = Vec::with_capacity(keep);
    let mut left = Vec::with_capacity(keep);
    let mut right = Vec::with_capacity(keep);
    for i in 0..keep {
        singulars.push(svd.singular_values[i]);
        left.push(u.column(i).clone_owned());
        right.push(v_t.row(i).transpose());
    }
    let value: f64 = (keep..k).map(|i| svd.singular_values[i]).sum();
    Ok(TailResult {
        value,
        minimizer: SparseDecomposition::RankOne { singulars, left, right },
        exact: true,
    })
}

/// `min |x_{T^c}|_1 s.t. Fx = z` for a fixed support T. Returns the
/// tail mass and the on-support coefficients.
pub(crate) fn frame_support_value(
    frame: &Frame,
    z: &DVector<f64>,
    support: &[usize],
    opts: &ApproxOptions,
) -> Result<(f64, DVector<f64>)> {
    let f = frame.matrix();
    let ft = f.select_columns(support.iter());
    let comp: Vec<usize> = (0..frame.len()).filter(|j| !support.contains(j)).collect();

    // Orthogonal complement of range(F_T) = null space of F_T^T.
    let spt = spectrum(&ft.transpose())?;
    let q = &spt.null_space; // d x (d - rank(F_T))
    if q.ncols() == 0 {
        // F_T spans R^d: the whole signal fits on the support.
        let x_t = lstsq(&ft, z);
        return Ok((0.0, x_t));
    }
    let m = q.transpose() * f.select_columns(comp.iter());
    let b = q.transpose() * z;
    let (w, value) = min_l1_equality(&m, &b, opts.max_candidates)?;
    let off = f.select_columns(comp.iter()) * &w;
    let x_t = lstsq(&ft, &(z - off));
    Ok((value, x_t))
}

fn frame_tail(
    frame: &Frame,
    z: &DVector<f64>,
    s: usize,
    opts: &ApproxOptions,
) -> Result<TailResult> {
    let n = frame.len();
    if s >= n {
        let (x, _) = super::frame_norm(frame, z)?;
        let indices: Vec<usize> = (0..n).collect();
        return Ok(TailResult {
            value: 0.0,
            minimizer: SparseDecomposition::Atoms { indices, coefficients: x.iter().copied().collect() },
            exact: true,
        });
    }
    if binomial(n, s) <= opts.max_supports {
        let mut best: Option<(f64, Vec<usize>, DVector<f64>)> = None;
        let mut failure: Option<Error> = None;
        for_each_combination(n, s, |support| {
            match frame_support_value(frame, z, support, opts) {
                Ok((value, x_t)) => {
                    if best.as_ref().map_or(true, |(b, _, _)| value < *b) {
                        best = Some((value, support.to_vec(), x_t));
                    }
                    true
                }
                Err(e) => {
                    failure = Some(e);
                    false
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let (value, indices, x_t) = best.expect("at least one support");
        return Ok(TailResult {
            value,
            minimizer: SparseDecomposition::Atoms {
                indices,
                coefficients: x_t.iter().copied().collect(),
            },
            exact: true,
        });
    }

    // Heuristic fallback: start from the minimal-l1 representation,
    // keep its s heaviest coefficients, then improve by single swaps.
    let (x_full, _) = super::frame_norm(frame, z)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x_full[b].abs().partial_cmp(&x_full[a].abs()).unwrap().then(a.cmp(&b)));
    let mut support: Vec<usize> = order[..s].to_vec();
    support.sort_unstable();
    let (mut value, mut x_t) = frame_support_value(frame, z, &support, opts)?;
    let mut improved = true;
    let mut sweeps = 0;
    while improved && sweeps < 10 {
        improved = false;
        sweeps += 1;
        'outer: for drop_pos in 0..s {
            for add in 0..n {
                if support.contains(&add) {
                    continue;
                }
                let mut cand = support.clone();
                cand[drop_pos] = add;
                cand.sort_unstable();
                let (v, xt) = frame_support_value(frame, z, &cand, opts)?;
                if v < value - 1e-12 {
                    support = cand;
                    value = v;
                    x_t = xt;
                    improved = true;
                    continue 'outer;
                }
            }
        }
    }
    Ok(TailResult {
        value,
        minimizer: SparseDecomposition::Atoms {
            indices: support,
            coefficients: x_t.iter().copied().collect(),
        },
        exact: false,
    })
}
