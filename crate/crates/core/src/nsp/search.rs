//! Shared search primitives for certification: seeded sphere sampling,
//! adaptive random-perturbation hill climbing, golden-section
//! refinement, Fibonacci sphere grids.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Adaptive random-perturbation ascent of `f` over the unit sphere.
/// Returns the best point and value found. `f` may return INFINITY,
/// which immediately wins.
pub fn hill_climb_max<R, F>(
    f: &F,
    start: DVector<f64>,
    iters: usize,
    step0: f64,
    rng: &mut R,
) -> (DVector<f64>, f64)
where
    R: Rng,
    F: Fn(&DVector<f64>) -> f64,
{
    let mut x = start.normalize();
    let mut best = f(&x);
    let mut step = step0;
    for _ in 0..iters {
        if !best.is_finite() {
            break;
        }
        let dir = DVector::from_fn(x.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let cand = (&x + dir * step).normalize();
        let v = f(&cand);
        if v > best {
            best = v;
            x = cand;
            step *= 1.3;
        } else {
            step *= 0.6;
            if step < 1e-12 {
                break;
            }
        }
    }
    (x, best)
}

pub fn hill_climb_min<R, F>(
    f: &F,
    start: DVector<f64>,
    iters: usize,
    step0: f64,
    rng: &mut R,
) -> (DVector<f64>, f64)
where
    R: Rng,
    F: Fn(&DVector<f64>) -> f64,
{
    let neg = |x: &DVector<f64>| -f(x);
    let (x, v) = hill_climb_max(&neg, start, iters, step0, rng);
    (x, -v)
}

/// Golden-section maximization of a scalar function on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    for _ in 0..iters {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

pub fn golden_min<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let neg = |t: f64| -f(t);
    let (t, v) = golden_max(&neg, a, b, iters);
    (t, -v)
}

/// Deterministic near-uniform grid of `n` points on S^2 (Fibonacci
/// lattice), returned as 3-vectors.
pub fn fibonacci_sphere(n: usize) -> Vec<DVector<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).max(0.0).sqrt();
            let t = golden * i as f64;
            DVector::from_vec(vec![r * t.cos(), y, r * t.sin()])
        })
        .collect()
}

/// Mixes null-space coordinates into ambient vectors: `z = B c` for an
/// orthonormal `d x k` basis `B`, unit `c` giving unit `z`.
pub fn from_null_coords(basis: &DMatrix<f64>, c: &DVector<f64>) -> DVector<f64> {
    basis * c
}
