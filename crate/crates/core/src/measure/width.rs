//! Gaussian and mean empirical width estimation.
//!
//! The inner supremum over the constraint set is exact for the full
//! sphere and finite point sets, exact per support for the canonical
//! basis cone `S_rho` (a polyhedral-cone projection solved by a
//! breakpoint scan), and a multistart feasible ascent elsewhere. The
//! ascent is lower-biased; estimates carry status counts and are never
//! used to affirm a certificate.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::atoms::{AtomicSet, Signal};
use crate::error::{Error, Result};
use crate::linalg::{binomial, for_each_combination};
use crate::par::Parallelism;

use super::Ensemble;

const SUPPORT_ENUM_LIMIT: usize = 10_000;

/// The set over which widths are estimated.
#[derive(Debug, Clone)]
pub enum WidthTarget<'a> {
    /// The full unit sphere (calibration mode; closed-form widths).
    FullSphere { dim: usize },
    /// `S_rho = {z : |z_s|_W >= rho |z - z_s|_W} ∩ S^{d-1}`.
    SRho { set: &'a AtomicSet, rho: f64, s: usize },
    /// A finite list of points.
    Points { dim: usize, points: Vec<DVector<f64>> },
}

impl WidthTarget<'_> {
    pub fn dim(&self) -> usize {
        match self {
            WidthTarget::FullSphere { dim } => *dim,
            WidthTarget::SRho { set, .. } => set.ambient_dim(),
            WidthTarget::Points { dim, .. } => *dim,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            WidthTarget::SRho { rho, s, set } => {
                if !(0.0..=1.0).contains(rho) {
                    return Err(Error::InvalidArgument(format!(
                        "rho must lie in (0, 1], got {rho}"
                    )));
                }
                if *s == 0 || *s > set.max_sparsity() {
                    return Err(Error::SparsityOutOfRange { s: *s, max: set.max_sparsity() });
                }
                Ok(())
            }
            WidthTarget::Points { points, dim } => {
                if points.is_empty() {
                    return Err(Error::InvalidArgument("empty point set".into()));
                }
                if points.iter().any(|p| p.len() != *dim) {
                    return Err(Error::InvalidArgument("point dimension mismatch".into()));
                }
                Ok(())
            }
            WidthTarget::FullSphere { .. } => Ok(()),
        }
    }
}

/// A Monte-Carlo width estimate with inner-solver status counts.
#[derive(Debug, Clone, Serialize)]
pub struct WidthEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Samples whose inner supremum was solved exactly.
    pub exact_sup: usize,
    /// Samples settled by multistart ascent (lower-biased).
    pub multistart_sup: usize,
}

fn summarize(values: &[f64], exact_sup: usize, multistart_sup: usize) -> WidthEstimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
    WidthEstimate {
        mean,
        stderr: (var / n as f64).sqrt(),
        samples: n,
        exact_sup,
        multistart_sup,
    }
}

/// `sup_{x in target} <g, x>` together with an exactness flag.
fn inner_sup(target: &WidthTarget, g: &DVector<f64>, stream_rng: &mut ChaCha8Rng) -> (f64, bool) {
    match target {
        WidthTarget::FullSphere { .. } => (g.norm(), true),
        WidthTarget::Points { points, .. } => {
            let v = points.iter().map(|p| g.dot(p)).fold(f64::NEG_INFINITY, f64::max);
            (v, true)
        }
        WidthTarget::SRho { set, rho, s } => match set {
            AtomicSet::CanonicalBasis { dim } if binomial(*dim, *s) <= SUPPORT_ENUM_LIMIT => {
                (canonical_srho_sup(g, *s, *rho), true)
            }
            _ => (multistart_sup_srho(set, *rho, *s, g, stream_rng), false),
        },
    }
}

/// Exact `sup <g, x>` over the canonical `S_rho` by support
/// enumeration. For a fixed support the optimum aligns signs with g
/// and reduces to projecting |g| onto the polyhedral cone
/// `{w >= 0, 1_T^T w >= rho 1_{T^c}^T w}`; the projection multiplier
/// solves a piecewise-linear equation scanned over breakpoints.
fn canonical_srho_sup(g: &DVector<f64>, s: usize, rho: f64) -> f64 {
    let d = g.len();
    let ag = g.map(f64::abs);
    let mut best = 0.0_f64;
    for_each_combination(d, s, |support| {
        let head: f64 = support.iter().map(|&j| ag[j]).sum();
        let tail: f64 = ag.iter().sum::<f64>() - head;
        if head >= rho * tail {
            best = best.max(ag.norm());
            return true;
        }
        // active constraint: w = max(0, ag + lambda h) with h = +1 on T
        // and -rho off T; solve phi(lambda) = h^T w(lambda) = 0 by a
        // breakpoint scan. phi is continuous, piecewise linear and
        // strictly increasing, so the root is unique.
        let mut comp: Vec<f64> = (0..d).filter(|j| !support.contains(j)).map(|j| ag[j]).collect();
        comp.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let head_count = s as f64;
        let mut tail_count = comp.len();
        let mut lambda_prev = 0.0;
        let mut phi_prev = head - rho * tail;
        let mut lambda_star = None;
        for &c in &comp {
            let lb = c / rho;
            let slope = head_count + rho * rho * tail_count as f64;
            let phi_at_lb = phi_prev + slope * (lb - lambda_prev);
            if phi_at_lb >= 0.0 {
                lambda_star = Some(lambda_prev - phi_prev / slope);
                break;
            }
            // the coordinate with magnitude c leaves the active set at lb
            phi_prev = phi_at_lb;
            lambda_prev = lb;
            tail_count -= 1;
        }
        let lambda =
            lambda_star.unwrap_or_else(|| lambda_prev - phi_prev.min(0.0) / head_count);
        let mut w = DVector::zeros(d);
        for &j in support {
            w[j] = ag[j] + lambda;
        }
        for j in 0..d {
            if !support.contains(&j) {
                w[j] = (ag[j] - lambda * rho).max(0.0);
            }
        }
        let norm = w.norm();
        if norm > 0.0 {
            best = best.max(ag.dot(&w) / norm);
        }
        true
    });
    best
}

/// Draw a feasible point of the target, spread into the cone interior.
pub fn sample_target_point<R: Rng>(target: &WidthTarget, rng: &mut R) -> Result<DVector<f64>> {
    match target {
        WidthTarget::FullSphere { dim } => Ok(random_unit(*dim, rng)),
        WidthTarget::Points { points, .. } => {
            let i = rng.gen_range(0..points.len());
            Ok(points[i].clone())
        }
        WidthTarget::SRho { set, rho, s } => {
            let z = random_unit(set.ambient_dim(), rng);
            let depth = rng.gen_range(0.2..1.0);
            feasible_srho(set, *rho, *s, &z, depth)
        }
    }
}

/// Rescale the tail part of `z` until it lies in `S_rho`; `depth < 1`
/// pushes strictly inside the cone.
pub(super) fn feasible_srho(
    set: &AtomicSet,
    rho: f64,
    s: usize,
    z: &DVector<f64>,
    depth: f64,
) -> Result<DVector<f64>> {
    let sig = Signal::reshape_for(set, z.clone())?;
    let t = set.tail(&sig, s)?;
    let head_sig = t.minimizer.assemble(set)?;
    let head = set.norm(&head_sig)?;
    if t.value <= 1e-14 || head >= rho * t.value {
        return Ok(z.normalize());
    }
    let shrink = depth * head / (rho * t.value);
    // v = head_part + shrink * tail_part
    let tail_flat = z - head_sig.flat();
    let v = head_sig.flat() + tail_flat * shrink;
    let n = v.norm();
    if n <= 1e-14 {
        return Ok(z.normalize());
    }
    Ok(v / n)
}

/// Multistart feasible ascent for the inner supremum on non-canonical
/// `S_rho` sets (lower-biased).
fn multistart_sup_srho(
    set: &AtomicSet,
    rho: f64,
    s: usize,
    g: &DVector<f64>,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let starts = 6;
    for k in 0..starts {
        let mut x = if k == 0 {
            // best s-sparse approximation direction of g itself is feasible
            match srho_start_from(set, s, g) {
                Some(v) => v,
                None => match feasible_srho(set, rho, s, &random_unit(g.len(), rng), 0.8) {
                    Ok(v) => v,
                    Err(_) => continue,
                },
            }
        } else {
            match feasible_srho(set, rho, s, &random_unit(g.len(), rng), 0.8) {
                Ok(v) => v,
                Err(_) => continue,
            }
        };
        let mut val = g.dot(&x);
        let mut step = 0.5;
        for _ in 0..60 {
            let cand = (&x + g * (step / g.norm().max(1e-12))).normalize();
            let feas = match feasible_srho(set, rho, s, &cand, 1.0) {
                Ok(v) => v,
                Err(_) => break,
            };
            let v = g.dot(&feas);
            if v > val {
                val = v;
                x = feas;
                step *= 1.2;
            } else {
                step *= 0.5;
                if step < 1e-10 {
                    break;
                }
            }
        }
        best = best.max(val);
    }
    best
}

/// A feasible start aligned with `g`: its best s-term approximation
/// (always in the cone: the tail of an s-sparse signal vanishes).
fn srho_start_from(set: &AtomicSet, s: usize, g: &DVector<f64>) -> Option<DVector<f64>> {
    let sig = Signal::reshape_for(set, g.clone()).ok()?;
    let t = set.tail(&sig, s).ok()?;
    let v = t.minimizer.assemble(set).ok()?;
    let n = v.flat().norm();
    if n <= 1e-14 {
        return None;
    }
    Some(v.flat() / n)
}

fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Gaussian width `w(S) = E sup_{x in S} <g, x>` by Monte Carlo over
/// standard Gaussian draws. `rho = 0` selects the full-sphere
/// calibration mode; otherwise the target is `S_rho`.
pub fn gaussian_width(
    set: &AtomicSet,
    rho: f64,
    s: usize,
    samples: usize,
    seed: u64,
    par: Parallelism,
) -> Result<WidthEstimate> {
    let target = if rho == 0.0 {
        WidthTarget::FullSphere { dim: set.ambient_dim() }
    } else {
        WidthTarget::SRho { set, rho, s }
    };
    width_with_target(&target, samples, seed, par, None)
}

/// Mean empirical width `W_m(S; phi)`: per outer sample draw
/// `(eps_i, phi_i)_{i<m}` and maximize against
/// `h = m^{-1/2} sum eps_i phi_i`.
pub fn empirical_width(
    ens: &Ensemble,
    target: &WidthTarget,
    m: usize,
    outer_samples: usize,
    par: Parallelism,
) -> Result<WidthEstimate> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    target.validate()?;
    let d = target.dim();
    let ens = *ens;
    let make_h = move |rng: &mut ChaCha8Rng| -> DVector<f64> {
        let mut h = DVector::zeros(d);
        for _ in 0..m {
            let eps: f64 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            for j in 0..d {
                h[j] += eps * ens.entry(rng);
            }
        }
        h / (m as f64).sqrt()
    };
    width_with_target(target, outer_samples, ens.seed, par, Some(Box::new(make_h)))
}

type DrawFn = Box<dyn Fn(&mut ChaCha8Rng) -> DVector<f64> + Sync + Send>;

fn width_with_target(
    target: &WidthTarget,
    samples: usize,
    seed: u64,
    par: Parallelism,
    draw: Option<DrawFn>,
) -> Result<WidthEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    target.validate()?;
    let d = target.dim();
    let results: Vec<(f64, bool)> = par.map(samples, |i| {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let g = match &draw {
            Some(f) => f(&mut rng),
            None => DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)),
        };
        inner_sup(target, &g, &mut rng)
    });
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let exact = results.iter().filter(|r| r.1).count();
    Ok(summarize(&values, exact, samples - exact))
}
