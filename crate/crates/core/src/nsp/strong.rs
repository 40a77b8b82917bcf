//! Strong null space property constant and the robust-NSP parameter
//! search.
//!
//! For the canonical basis and the rank-one manifold the inner minimum
//! over sparse competitors collapses to `sigma_{W,s}(z) - |z_s|_W`
//! (telescoping of the scalar identity `min_c(|t - c| - |c|) = -t`),
//! so the strong constant is the minimum of that gap over the
//! null-space unit sphere. Frames get a direct two-level search over
//! (z, v) pairs.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::atoms::{AtomicSet, Signal};
use crate::error::{Error, Result};
use crate::linalg::{binomial, for_each_combination};
use crate::solvers::MeasurementOperator;

use super::search::{from_null_coords, golden_min, hill_climb_max, hill_climb_min, random_unit};
use super::{CertifyOptions, Holds, Method, NspCertificate, NspKind, Witness};

/// `sigma_{W,s}(z) - |z_s|_W` for the collapsing sets.
pub(super) fn strong_gap(set: &AtomicSet, z: &Signal, s: usize) -> Result<f64> {
    let t = set.tail(z, s)?;
    let head = set.norm(&t.minimizer.assemble(set)?)?;
    Ok(t.value - head)
}

/// Strong-NSP constant `c` (largest constant in
/// `|z - v|_W - |v|_W >= c |z|_2` over the null space).
pub fn strong_constant(
    set: &AtomicSet,
    op: &MeasurementOperator,
    s: usize,
    opts: &CertifyOptions,
) -> Result<NspCertificate> {
    if op.ambient_dim() != set.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: set.ambient_dim(), got: op.ambient_dim() });
    }
    if s == 0 || s > set.max_sparsity() {
        return Err(Error::SparsityOutOfRange { s, max: set.max_sparsity() });
    }
    let mut cert = NspCertificate {
        kind: NspKind::Strong,
        s,
        holds: Holds::Unknown,
        rho: None,
        tau: None,
        c: None,
        method: Method::SampledBound,
        witness: None,
        seed: opts.seed,
        samples: 0,
        downgraded: false,
    };
    if op.null_dim() == 0 {
        cert.holds = Holds::Yes;
        cert.c = Some(f64::INFINITY);
        cert.method = Method::ExactEnumeration;
        return Ok(cert);
    }
    match set {
        AtomicSet::FiniteFrame(frame) => {
            let (c_hat, witness, samples) = frame_two_level_min(set, frame, op, s, opts)?;
            cert.c = Some(c_hat);
            cert.samples = samples;
            cert.witness = Some(witness);
            cert.holds = if c_hat <= 0.0 { Holds::No } else { Holds::Unknown };
            Ok(cert)
        }
        _ => {
            let b = op.null_space();
            let k = b.ncols();
            let eval = |c: &DVector<f64>| -> f64 {
                let Ok(z) = Signal::reshape_for(set, from_null_coords(b, c)) else {
                    return f64::INFINITY;
                };
                strong_gap(set, &z, s).unwrap_or(f64::INFINITY)
            };
            let exact = match set {
                AtomicSet::CanonicalBasis { .. } => k <= 2,
                _ => k == 1,
            };
            let (best_c, c_hat, samples) = if k == 1 {
                (DVector::from_vec(vec![1.0]), eval(&DVector::from_vec(vec![1.0])), 0)
            } else if exact {
                // dense angle grid with golden refinement
                let n = opts.grid_1d;
                let pi = std::f64::consts::PI;
                let at = |t: f64| DVector::from_vec(vec![t.cos(), t.sin()]);
                let mut best_t = 0.0;
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let t = pi * i as f64 / n as f64;
                    let v = eval(&at(t));
                    if v < best {
                        best = v;
                        best_t = t;
                    }
                }
                let h = pi / n as f64;
                let f = |t: f64| eval(&at(t));
                let (t, v) = golden_min(&f, best_t - h, best_t + h, 120);
                if v < best {
                    (at(t), v, n)
                } else {
                    (at(best_t), best, n)
                }
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                let mut best_c = random_unit(k, &mut rng);
                let mut best = eval(&best_c);
                for _ in 1..opts.samples {
                    let c = random_unit(k, &mut rng);
                    let v = eval(&c);
                    if v < best {
                        best = v;
                        best_c = c;
                    }
                }
                for _ in 0..opts.multistarts {
                    let (c, v) = hill_climb_min(&eval, best_c.clone(), 200, opts.step, &mut rng);
                    if v < best {
                        best = v;
                        best_c = c;
                    }
                }
                (best_c, best, opts.samples)
            };
            let z = Signal::reshape_for(set, from_null_coords(b, &best_c))?;
            let v = set.best_s_approx(&z, s)?.assemble(set)?;
            cert.witness = Some(Witness { z, v: Some(v), support: None });
            cert.c = Some(c_hat);
            cert.samples = samples;
            cert.method = if exact { Method::ExactEnumeration } else { Method::SampledBound };
            cert.holds = if exact {
                if c_hat > 0.0 {
                    Holds::Yes
                } else {
                    Holds::No
                }
            } else if c_hat <= 0.0 {
                Holds::No
            } else {
                Holds::Unknown
            };
            Ok(cert)
        }
    }
}

/// Two-level sampling for frames: null directions crossed with sparse
/// competitors from every support (scaled), minimizing
/// `|z - v|_F - |v|_F`.
fn frame_two_level_min(
    set: &AtomicSet,
    frame: &crate::atoms::Frame,
    op: &MeasurementOperator,
    s: usize,
    opts: &CertifyOptions,
) -> Result<(f64, Witness, usize)> {
    let b = op.null_space();
    let k = b.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_atoms = frame.len();
    let enumerate_supports = binomial(n_atoms, s) <= 512;
    let scalings = [0.5, 0.75, 1.0, 1.25, 1.5, 2.0];
    let mut best = f64::INFINITY;
    let mut best_pair: Option<(Signal, Signal)> = None;
    let samples = opts.samples.min(2_000); // each sample costs a support sweep

    for _ in 0..samples {
        let z = Signal::vector(from_null_coords(b, &random_unit(k, &mut rng)));
        let mut candidates: Vec<Signal> = Vec::new();
        if enumerate_supports {
            for_each_combination(n_atoms, s, |support| {
                let aopts = crate::atoms::ApproxOptions::default();
                if let Ok((_, x_t)) =
                    crate::atoms::frame_support_value(frame, z.flat(), support, &aopts)
                {
                    let mut v = DVector::zeros(frame.dim());
                    for (slot, &j) in support.iter().enumerate() {
                        v += frame.atom(j) * x_t[slot];
                    }
                    candidates.push(Signal::vector(v));
                }
                true
            });
        } else {
            candidates.push(set.tail(&z, s)?.minimizer.assemble(set)?);
        }
        for cand in candidates {
            for &t in &scalings {
                let v = Signal::vector(cand.flat() * t);
                let gap = set.norm(&Signal::vector(z.flat() - v.flat()))? - set.norm(&v)?;
                if gap < best {
                    best = gap;
                    best_pair = Some((z.clone(), v));
                }
            }
        }
    }
    let (z, v) = best_pair.expect("at least one sample");
    Ok((best, Witness { z, v: Some(v), support: None }, samples))
}

/// Sampled robust-NSP parameter: largest observed
/// `(|z_s|_W - rho |z - z_s|_W)_+ / |Az|_2` over the ambient unit
/// sphere, refined by local ascent. A lower bound on the true tau.
pub fn robust_params(
    set: &AtomicSet,
    op: &MeasurementOperator,
    s: usize,
    rho_target: f64,
    opts: &CertifyOptions,
) -> Result<NspCertificate> {
    if !(0.0..1.0).contains(&rho_target) || rho_target <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rho_target must lie in (0, 1), got {rho_target}"
        )));
    }
    if s == 0 || s > set.max_sparsity() {
        return Err(Error::SparsityOutOfRange { s, max: set.max_sparsity() });
    }
    let d = set.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let eval = |flat: &DVector<f64>| -> f64 {
        let Ok(z) = Signal::reshape_for(set, flat.clone()) else {
            return f64::NEG_INFINITY;
        };
        let Ok(t) = set.tail(&z, s) else { return f64::NEG_INFINITY };
        let Ok(vz) = t.minimizer.assemble(set) else { return f64::NEG_INFINITY };
        let Ok(head) = set.norm(&vz) else { return f64::NEG_INFINITY };
        let num = (head - rho_target * t.value).max(0.0);
        if num == 0.0 {
            return 0.0;
        }
        let az = op.apply_flat(flat).norm();
        if az <= 1e-12 {
            return f64::INFINITY;
        }
        num / az
    };

    let mut best_z = random_unit(d, &mut rng);
    let mut best = eval(&best_z);
    for _ in 1..opts.samples {
        if !best.is_finite() {
            break;
        }
        let z = random_unit(d, &mut rng);
        let v = eval(&z);
        if v > best {
            best = v;
            best_z = z;
        }
    }
    if best.is_finite() {
        for _ in 0..opts.multistarts.min(8) {
            let (z, v) = hill_climb_max(&eval, best_z.clone(), 150, opts.step, &mut rng);
            if v > best {
                best = v;
                best_z = z;
            }
            if !best.is_finite() {
                break;
            }
        }
    }

    let z = Signal::reshape_for(set, best_z)?;
    let v = set.best_s_approx(&z, s)?.assemble(set)?;
    let holds = if best.is_finite() { Holds::Unknown } else { Holds::No };
    Ok(NspCertificate {
        kind: NspKind::Robust,
        s,
        holds,
        rho: Some(rho_target),
        tau: Some(best.max(0.0)),
        c: None,
        method: Method::SampledBound,
        witness: Some(Witness { z, v: Some(v), support: None }),
        seed: opts.seed,
        samples: opts.samples,
        downgraded: false,
    })
}
