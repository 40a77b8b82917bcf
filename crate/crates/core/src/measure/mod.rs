//! Subgaussian measurement ensembles, width and small-ball
//! estimation, and the measurement-count recommendation.

mod smallball;
mod width;

pub use smallball::{empirical_q, mendelson_check, recommended_m, MendelsonReport};
pub use width::{empirical_width, gaussian_width, sample_target_point, WidthEstimate, WidthTarget};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::solvers::MeasurementOperator;

/// Row distribution of a random measurement matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnsembleKind {
    Gaussian,
    Rademacher,
    /// Entries uniform on `[-sqrt(3), sqrt(3)]` (unit variance).
    UniformScaled,
}

/// A seeded, scaled i.i.d. ensemble.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    pub scale: f64,
    pub seed: u64,
}

impl Ensemble {
    pub fn gaussian(seed: u64) -> Ensemble {
        Ensemble { kind: EnsembleKind::Gaussian, scale: 1.0, seed }
    }

    pub fn rademacher(seed: u64) -> Ensemble {
        Ensemble { kind: EnsembleKind::Rademacher, scale: 1.0, seed }
    }

    pub fn uniform(seed: u64) -> Ensemble {
        Ensemble { kind: EnsembleKind::UniformScaled, scale: 1.0, seed }
    }

    pub fn entry<R: Rng>(&self, rng: &mut R) -> f64 {
        self.scale
            * match self.kind {
                EnsembleKind::Gaussian => rng.sample::<f64, _>(StandardNormal),
                EnsembleKind::Rademacher => {
                    if rng.gen::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                EnsembleKind::UniformScaled => {
                    let r3 = 3.0_f64.sqrt();
                    rng.gen_range(-r3..r3)
                }
            }
    }

    /// RNG for a derived stream (per-trial/per-sample determinism).
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Draw an `m x d` operator with i.i.d. rows from the ensemble.
/// Reproducible from the ensemble seed; `stream` selects independent
/// draws under the same seed.
pub fn sample_operator_stream(
    ens: &Ensemble,
    m: usize,
    d: usize,
    stream: u64,
) -> Result<MeasurementOperator> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidArgument("operator dimensions must be positive".into()));
    }
    let mut rng = ens.rng(stream);
    let mut a = DMatrix::zeros(m, d);
    for i in 0..m {
        for j in 0..d {
            a[(i, j)] = ens.entry(&mut rng);
        }
    }
    MeasurementOperator::new(a)
}

/// Draw with the ensemble's base stream.
pub fn sample_operator(ens: &Ensemble, m: usize, d: usize) -> Result<MeasurementOperator> {
    sample_operator_stream(ens, m, d, 0)
}

/// How the `(alpha, sigma)` pair was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParamMethod {
    Analytic,
    MonteCarlo,
}

/// Subgaussian parameters: `E|<phi, z>| >= alpha` on the unit sphere
/// and tails `P(|<phi, z>| >= t) <= 2 exp(-t^2 / 2 sigma^2)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubgaussianParams {
    pub alpha: f64,
    pub sigma: f64,
    pub method: ParamMethod,
    pub stderr: f64,
}

/// Estimate `(alpha, sigma)` for the ensemble in dimension `d`.
///
/// Gaussian rows are fully analytic. Rademacher and uniform rows get
/// the Hoeffding tail parameter analytically and a conservative
/// Monte-Carlo `alpha` (minimum over a fixed direction net of the
/// empirical mean minus two standard errors).
pub fn estimate_params(ens: &Ensemble, d: usize, samples: usize) -> Result<SubgaussianParams> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if samples < 1_000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let root_2_over_pi = (2.0 / std::f64::consts::PI).sqrt();
    match ens.kind {
        EnsembleKind::Gaussian => Ok(SubgaussianParams {
            alpha: ens.scale * root_2_over_pi,
            sigma: ens.scale,
            method: ParamMethod::Analytic,
            stderr: 0.0,
        }),
        EnsembleKind::Rademacher if d == 1 => Ok(SubgaussianParams {
            alpha: ens.scale,
            sigma: ens.scale,
            method: ParamMethod::Analytic,
            stderr: 0.0,
        }),
        _ => {
            // Hoeffding tail parameter for bounded entries
            let sigma = match ens.kind {
                EnsembleKind::Rademacher => ens.scale,
                EnsembleKind::UniformScaled => ens.scale * 3.0_f64.sqrt(),
                EnsembleKind::Gaussian => unreachable!(),
            };
            let net = direction_net(d, ens.seed);
            let mut alpha = f64::INFINITY;
            let mut worst_stderr = 0.0_f64;
            for (i, u) in net.iter().enumerate() {
                let mut rng = ens.rng(0x9e37_79b9 ^ i as u64);
                let mut sum = 0.0;
                let mut sumsq = 0.0;
                for _ in 0..samples {
                    let x: f64 = (0..d).map(|j| ens.entry(&mut rng) * u[j]).sum();
                    sum += x.abs();
                    sumsq += x * x;
                }
                let mean = sum / samples as f64;
                let var = (sumsq / samples as f64 - mean * mean).max(0.0);
                let stderr = (var / samples as f64).sqrt();
                let a = mean - 2.0 * stderr;
                if a < alpha {
                    alpha = a;
                    worst_stderr = stderr;
                }
            }
            Ok(SubgaussianParams {
                alpha: alpha.max(0.0),
                sigma,
                method: ParamMethod::MonteCarlo,
                stderr: worst_stderr,
            })
        }
    }
}

/// Fixed direction net: canonical vectors, the constant direction, and
/// seeded random units.
fn direction_net(d: usize, seed: u64) -> Vec<nalgebra::DVector<f64>> {
    use nalgebra::DVector;
    let mut net = Vec::new();
    for j in 0..d.min(8) {
        let mut e = DVector::zeros(d);
        e[j] = 1.0;
        net.push(e);
    }
    net.push(DVector::from_element(d, 1.0 / (d as f64).sqrt()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd1ec);
    for _ in 0..16 {
        net.push(crate::nsp::search_random_unit(d, &mut rng));
    }
    net
}

/// Small-ball probability lower bound `(alpha - t)^2 / (4 sigma^2)`
/// for `0 < t < alpha`.
pub fn q_lower_bound(params: &SubgaussianParams, t: f64) -> Result<f64> {
    if t <= 0.0 || t >= params.alpha {
        return Err(Error::InvalidArgument(format!(
            "t must lie in (0, alpha = {}), got {t}",
            params.alpha
        )));
    }
    Ok((params.alpha - t).powi(2) / (4.0 * params.sigma * params.sigma))
}
