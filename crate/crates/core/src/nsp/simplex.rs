//! Dense two-phase primal simplex for the small LPs arising in exact
//! null-space-property certification: `max c^T x s.t. Ax = b, x >= 0`.
//! Bland's rule throughout, so the heavily degenerate instances (most
//! right-hand sides here are zero) terminate.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: DVector<f64> },
    Unbounded,
    Infeasible,
}

const PIVOT_TOL: f64 = 1e-11;

struct Tableau {
    // rows x (cols + 1); last column is the rhs
    t: DMatrix<f64>,
    basis: Vec<usize>,
    // reduced-cost row for the current objective, last entry = -objective
    obj: DVector<f64>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[(row, col)];
        let ncols = self.t.ncols();
        for j in 0..ncols {
            self.t[(row, j)] /= piv;
        }
        for i in 0..self.t.nrows() {
            if i != row {
                let factor = self.t[(i, col)];
                if factor != 0.0 {
                    for j in 0..ncols {
                        self.t[(i, j)] -= factor * self.t[(row, j)];
                    }
                }
            }
        }
        let factor = self.obj[col];
        if factor != 0.0 {
            for j in 0..ncols {
                self.obj[j] -= factor * self.t[(row, j)];
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule iteration for maximization. Returns false on
    /// unboundedness.
    fn run(&mut self, active_cols: usize) -> bool {
        loop {
            // entering: lowest index with positive reduced cost
            let mut entering = None;
            for j in 0..active_cols {
                if self.obj[j] > PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return true };
            // leaving: min ratio, ties to lowest basis index
            let rhs_col = self.t.ncols() - 1;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.nrows() {
                let a = self.t[(i, col)];
                if a > PIVOT_TOL {
                    let ratio = self.t[(i, rhs_col)] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - PIVOT_TOL
                                || ((ratio - br).abs() <= PIVOT_TOL
                                    && self.basis[i] < self.basis[bi])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leave else { return false };
            self.pivot(row, col);
        }
    }
}

/// Maximize `c^T x` subject to `Ax = b`, `x >= 0`.
pub fn simplex_max(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> LpOutcome {
    let (m, n) = (a.nrows(), a.ncols());
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), n);

    // sign-normalize so b >= 0, then append artificial variables
    let mut t = DMatrix::zeros(m, n + m + 1);
    for i in 0..m {
        let s = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = s * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, n + m)] = s * b[i];
    }
    let basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: maximize -(sum of artificials)
    let mut obj = DVector::zeros(n + m + 1);
    for j in n..n + m {
        obj[j] = -1.0;
    }
    let mut tab = Tableau { t, basis, obj };
    // price out the initial basis
    for i in 0..m {
        let col = tab.basis[i];
        let factor = tab.obj[col];
        if factor != 0.0 {
            for j in 0..tab.t.ncols() {
                let v = tab.t[(i, j)];
                tab.obj[j] -= factor * v;
            }
        }
    }
    if !tab.run(n + m) {
        // phase 1 objective is bounded by 0; cannot happen
        return LpOutcome::Infeasible;
    }
    let phase1 = -tab.obj[n + m];
    if phase1 < -1e-7 {
        return LpOutcome::Infeasible;
    }
    // drive remaining artificials out of the basis where possible
    for i in 0..m {
        if tab.basis[i] >= n {
            let mut pivot_col = None;
            for j in 0..n {
                if tab.t[(i, j)].abs() > 1e-9 {
                    pivot_col = Some(j);
                    break;
                }
            }
            if let Some(j) = pivot_col {
                tab.pivot(i, j);
            }
            // else the row is redundant; the artificial stays basic at 0
        }
    }

    // Phase 2 objective
    let mut obj = DVector::zeros(n + m + 1);
    for j in 0..n {
        obj[j] = c[j];
    }
    tab.obj = obj;
    for i in 0..m {
        let col = tab.basis[i];
        let factor = tab.obj[col];
        if factor != 0.0 {
            for j in 0..tab.t.ncols() {
                let v = tab.t[(i, j)];
                tab.obj[j] -= factor * v;
            }
        }
    }
    if !tab.run(n) {
        return LpOutcome::Unbounded;
    }
    let rhs_col = tab.t.ncols() - 1;
    let mut x = DVector::zeros(n);
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.t[(i, rhs_col)];
        }
    }
    LpOutcome::Optimal { value: c.dot(&x), x }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{for_each_combination, lstsq};
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force LP by enumerating basic feasible solutions.
    fn brute_max(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Option<f64> {
        let (m, n) = (a.nrows(), a.ncols());
        let mut best: Option<f64> = None;
        if b.norm() < 1e-10 {
            best = Some(0.0); // x = 0 is feasible
        }
        for k in 1..=m.min(n) {
            for_each_combination(n, k, |cols| {
                let sub = a.select_columns(cols.iter());
                let xs = lstsq(&sub, b);
                if (&sub * &xs - b).norm() < 1e-8 && xs.iter().all(|&v| v >= -1e-9) {
                    let mut x = DVector::zeros(n);
                    for (slot, &j) in cols.iter().enumerate() {
                        x[j] = xs[slot].max(0.0);
                    }
                    let val = c.dot(&x);
                    if best.map_or(true, |bv| val > bv) {
                        best = Some(val);
                    }
                }
                true
            });
        }
        best
    }

    #[test]
    fn simple_bounded_lp() {
        // max x0 + x1 s.t. x0 + x1 + s = 1
        let a = dmatrix![1.0, 1.0, 1.0];
        let b = DVector::from_vec(vec![1.0]);
        let c = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        match simplex_max(&a, &b, &c) {
            LpOutcome::Optimal { value, .. } => assert!((value - 1.0).abs() < 1e-10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unbounded_lp_detected() {
        // max x0 s.t. x0 - x1 = 0 (ray x0 = x1 -> infinity)
        let a = dmatrix![1.0, -1.0];
        let b = DVector::from_vec(vec![0.0]);
        let c = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(simplex_max(&a, &b, &c), LpOutcome::Unbounded);
    }

    #[test]
    fn infeasible_lp_detected() {
        // x0 = -1 with x0 >= 0
        let a = dmatrix![1.0];
        let b = DVector::from_vec(vec![-1.0]);
        let c = DVector::from_vec(vec![0.0]);
        assert_eq!(simplex_max(&a, &b, &c), LpOutcome::Infeasible);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0;
        for _ in 0..300 {
            let m = rng.gen_range(1..=3);
            let n = rng.gen_range(m..=6);
            let a = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-2.0..2.0));
            let x0 = DVector::from_fn(n, |_, _| rng.gen_range(0.0..1.0));
            let b = &a * &x0; // feasible by construction
            let c = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let got = simplex_max(&a, &b, &c);
            let brute = brute_max(&a, &b, &c);
            match got {
                LpOutcome::Optimal { value, x } => {
                    let bv = brute.expect("brute must find a vertex when simplex does");
                    assert!(
                        (value - bv).abs() <= 1e-6 * (1.0 + bv.abs()),
                        "value {value} vs brute {bv}"
                    );
                    assert!((a.clone() * &x - &b).norm() < 1e-7);
                    assert!(x.iter().all(|&v| v >= -1e-9));
                }
                LpOutcome::Unbounded => {
                    // brute enumeration cannot certify unboundedness; skip
                }
                LpOutcome::Infeasible => panic!("feasible by construction"),
            }
            checked += 1;
        }
        assert_eq!(checked, 300);
    }
}
