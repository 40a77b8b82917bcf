//! Small-ball probability estimation, the Mendelson lower-bound
//! inequality check, and the measurement-count recommendation.

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::atoms::AtomicSet;
use crate::error::{Error, Result};
use crate::par::Parallelism;

use super::width::{empirical_width, sample_target_point, WidthEstimate, WidthTarget};
use super::{sample_operator_stream, Ensemble, SubgaussianParams};

/// Monte-Carlo estimate of `Q_xi(S; phi) = inf_{x in S} P(|<x, phi>| >= xi)`.
///
/// The infimum runs over `point_samples` drawn points of the set (an
/// upper bound on the true infimum); the probability per point is
/// estimated from `trials` ensemble draws shared across points.
/// Returns the estimate and its binomial standard error.
pub fn empirical_q(
    ens: &Ensemble,
    target: &WidthTarget,
    xi: f64,
    trials: usize,
    point_samples: usize,
    par: Parallelism,
) -> Result<(f64, f64)> {
    if xi < 0.0 {
        return Err(Error::InvalidArgument("xi must be nonnegative".into()));
    }
    if trials == 0 || point_samples == 0 {
        return Err(Error::InvalidArgument("trials and point_samples must be >= 1".into()));
    }
    let d = target.dim();
    // deterministic point set
    let mut rng = ens.rng(0xface);
    let points: Vec<DVector<f64>> = (0..point_samples)
        .map(|_| sample_target_point(target, &mut rng))
        .collect::<Result<_>>()?;
    // per-trial hit counts, parallel over trials
    let ens_copy = *ens;
    let hits: Vec<Vec<bool>> = par.map(trials, |t| {
        let mut rng = ens_copy.rng(0x51ba11 ^ t as u64);
        let phi = DVector::from_fn(d, |_, _| ens_copy.entry(&mut rng));
        points.iter().map(|x| x.dot(&phi).abs() >= xi).collect()
    });
    let mut q = 1.0_f64;
    for (i, _) in points.iter().enumerate() {
        let count = hits.iter().filter(|h| h[i]).count();
        let p = count as f64 / trials as f64;
        if p < q {
            q = p;
        }
    }
    let stderr = (q * (1.0 - q) / trials as f64).sqrt();
    Ok((q, stderr))
}

/// `m = ceil(4^8 sigma^4 C^2 w^2 / alpha^6)` and the success
/// probability `1 - exp(-m alpha^4 / (64^2 sigma^4))` at that m.
pub fn recommended_m(
    params: &SubgaussianParams,
    width: &WidthEstimate,
    c_majorizing: f64,
) -> Result<(usize, f64)> {
    if width.mean <= 0.0 {
        return Err(Error::InvalidArgument("width must be positive".into()));
    }
    if c_majorizing <= 0.0 {
        return Err(Error::InvalidArgument("majorizing constant must be positive".into()));
    }
    let a = params.alpha;
    let s = params.sigma;
    if a <= 0.0 || s <= 0.0 {
        return Err(Error::InvalidArgument("alpha and sigma must be positive".into()));
    }
    let m_real = 65536.0 * s.powi(4) * c_majorizing * c_majorizing * width.mean * width.mean
        / a.powi(6);
    let m = m_real.ceil() as usize;
    let prob = 1.0 - (-(m as f64) * a.powi(4) / (4096.0 * s.powi(4))).exp();
    Ok((m, prob))
}

/// Outcome of a Mendelson small-ball verification run.
#[derive(Debug, Clone, Serialize)]
pub struct MendelsonReport {
    pub trials: usize,
    pub satisfied: usize,
    pub satisfied_fraction: f64,
    /// `1 - exp(-t^2/2)`, the probability level the small-ball bound
    /// guarantees.
    pub threshold: f64,
    pub rhs: f64,
    /// Mean over trials of `inf |Ax|_2` (grows like sqrt(m)).
    pub lhs_mean: f64,
    pub q_hat: f64,
    pub q_stderr: f64,
    pub width: WidthEstimate,
    pub xi: f64,
    pub t: f64,
    pub m: usize,
    pub seed: u64,
}

/// Verify `inf_{x in S_rho} |Ax|_2 >= xi sqrt(m) Q_{2xi} - 2 W_m - xi t`
/// over independent operator draws, reporting the satisfaction
/// fraction against the guaranteed probability.
#[allow(clippy::too_many_arguments)]
pub fn mendelson_check(
    ens: &Ensemble,
    set: &AtomicSet,
    rho: f64,
    s: usize,
    m: usize,
    xi: f64,
    t: f64,
    trials: usize,
    par: Parallelism,
) -> Result<MendelsonReport> {
    if xi <= 0.0 || t <= 0.0 {
        return Err(Error::InvalidArgument("xi and t must be positive".into()));
    }
    if trials == 0 || m == 0 {
        return Err(Error::InvalidArgument("trials and m must be >= 1".into()));
    }
    let target = WidthTarget::SRho { set, rho, s };
    let width = empirical_width(ens, &target, m, 2_000, par)?;
    let (q_hat, q_stderr) = empirical_q(ens, &target, 2.0 * xi, 4_000, 200, par)?;
    let rhs = xi * (m as f64).sqrt() * q_hat - 2.0 * width.mean - xi * t;

    let d = set.ambient_dim();
    let ens_copy = *ens;
    let per_trial: Vec<(bool, f64)> = par.map(trials, |j| {
        let Ok(op) = sample_operator_stream(&ens_copy, m, d, 0xa11ce ^ j as u64) else {
            return (false, f64::NAN);
        };
        // lower-biased inf over sampled feasible points with a local
        // polish of the best candidates
        let mut rng = ens_copy.rng(0x1f2e3d ^ j as u64);
        let mut best = f64::INFINITY;
        let mut best_x: Option<DVector<f64>> = None;
        for _ in 0..256 {
            let Ok(x) = sample_target_point(&target, &mut rng) else { continue };
            let v = op.apply_flat(&x).norm();
            if v < best {
                best = v;
                best_x = Some(x);
            }
        }
        if let Some(mut x) = best_x {
            let mut step = 0.3;
            for _ in 0..80 {
                let dir = DVector::from_fn(d, |_, _| {
                    rng.sample::<f64, _>(rand_distr::StandardNormal)
                });
                let cand = (&x + dir * step).normalize();
                let Ok(feas) = super::width::feasible_srho(set, rho, s, &cand, 1.0) else {
                    break;
                };
                let v = op.apply_flat(&feas).norm();
                if v < best {
                    best = v;
                    x = feas;
                    step *= 1.2;
                } else {
                    step *= 0.6;
                    if step < 1e-8 {
                        break;
                    }
                }
            }
        }
        (best >= rhs, best)
    });
    let satisfied = per_trial.iter().filter(|(ok, _)| *ok).count();
    let lhs_mean = per_trial.iter().map(|(_, v)| v).sum::<f64>() / trials as f64;
    Ok(MendelsonReport {
        trials,
        satisfied,
        satisfied_fraction: satisfied as f64 / trials as f64,
        threshold: 1.0 - (-t * t / 2.0).exp(),
        rhs,
        lhs_mean,
        q_hat,
        q_stderr,
        width,
        xi,
        t,
        m,
        seed: ens.seed,
    })
}
