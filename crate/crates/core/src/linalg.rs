//! Dense linear algebra helpers shared across the crate: spectral data
//! of a measurement matrix, null-space bases, least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold below which a singular value counts as zero.
pub const RANK_TOL_FACTOR: f64 = 1e-10;

/// Cached spectral data of an `m x d` matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Singular values in descending order (length `min(m, d)`).
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Smallest nonzero singular value.
    pub nu: f64,
    /// `d x rank` orthonormal basis of the row space.
    pub row_space: DMatrix<f64>,
    /// `d x (d - rank)` orthonormal basis of the null space.
    pub null_space: DMatrix<f64>,
}

pub fn spectrum(a: &DMatrix<f64>) -> Result<Spectrum> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let d = a.ncols();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd v_t requested");
    let svals: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = svals.first().copied().unwrap_or(0.0);
    let tol = RANK_TOL_FACTOR * smax.max(1e-300);
    let rank = svals.iter().filter(|&&s| s > tol).count();
    if rank == 0 {
        return Err(Error::InvalidArgument("matrix is numerically zero".into()));
    }
    let nu = svals[rank - 1];
    let mut row_cols = Vec::with_capacity(rank);
    for i in 0..rank {
        row_cols.push(v_t.row(i).transpose());
    }
    let row_space = DMatrix::from_columns(&row_cols);
    let null_space = orthonormal_complement(&row_space, d);
    Ok(Spectrum { singular_values: svals, rank, nu, row_space, null_space })
}

/// Complete an orthonormal `dim x r` column set to a full basis and
/// return the `dim x (dim - r)` complement. Deterministic: candidates
/// are the canonical basis vectors in index order, orthogonalized by
/// modified Gram-Schmidt with one reorthogonalization pass.
pub fn orthonormal_complement(basis: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let r = basis.ncols();
    let want = dim - r;
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(want);
    if want == 0 {
        return DMatrix::zeros(dim, 0);
    }
    for j in 0..dim {
        if cols.len() == want {
            break;
        }
        let mut v = DVector::zeros(dim);
        v[j] = 1.0;
        for _ in 0..2 {
            for c in basis.column_iter() {
                let dot = c.dot(&v);
                v.axpy(-dot, &c.clone_owned(), 1.0);
            }
            for c in &cols {
                let dot = c.dot(&v);
                v.axpy(-dot, c, 1.0);
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v / n);
        }
    }
    assert_eq!(cols.len(), want, "failed to complete orthonormal basis");
    DMatrix::from_columns(&cols)
}

/// Least-squares solve `min |Ax - b|_2` via SVD (minimum-norm solution).
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    svd.solve(b, RANK_TOL_FACTOR * smax.max(1e-300))
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Singular values of a matrix in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    a.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Iterate over all k-subsets of `0..n` in lexicographic order.
pub fn for_each_combination<F: FnMut(&[usize]) -> bool>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    if k == 0 {
        f(&idx);
        return;
    }
    loop {
        if !f(&idx) {
            return;
        }
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Binomial coefficient, saturating at `usize::MAX`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}
