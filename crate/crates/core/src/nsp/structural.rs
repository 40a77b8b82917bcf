//! Structural properties of atomic sets: s-splittability and
//! s-evenness. The canonical basis and the rank-one manifold are
//! splittable analytically; sampling still runs as a regression check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::atoms::{AtomicSet, Signal, SparseDecomposition};
use crate::error::{Error, Result};
use crate::solvers::MeasurementOperator;

use super::{stable_rho, CertifyOptions, Holds, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PropertyKind {
    Splittable,
    SEven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    AnalyticTrue,
    PassedSampling,
    Falsified,
}

/// Outcome of a structural check.
#[derive(Debug, Clone)]
pub struct StructuralReport {
    pub property: PropertyKind,
    pub s: usize,
    pub verdict: Verdict,
    /// Violating signals when falsified (pair for splittable, the
    /// combination for s-even).
    pub counterexample: Option<Vec<Signal>>,
    pub trials: usize,
    pub seed: u64,
    /// Amount by which the defining inequality failed.
    pub margin: f64,
}

const VIOLATION_TOL: f64 = 1e-8;

/// Check `|x + y|_W >= |x_s|_W - |y_s|_W + |y - y_s|_W - |x - x_s|_W`
/// on random ambient pairs.
pub fn check_splittable(
    set: &AtomicSet,
    s: usize,
    trials: usize,
    seed: u64,
) -> Result<StructuralReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if s == 0 || s > set.max_sparsity() {
        return Err(Error::SparsityOutOfRange { s, max: set.max_sparsity() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violation: Option<(Vec<Signal>, f64)> = None;
    for _ in 0..trials {
        let x = set.sample_ambient(&mut rng);
        let y = set.sample_ambient(&mut rng);
        let tx = set.tail(&x, s)?;
        let ty = set.tail(&y, s)?;
        let xs_norm = set.norm(&tx.minimizer.assemble(set)?)?;
        let ys_norm = set.norm(&ty.minimizer.assemble(set)?)?;
        let sum = Signal::reshape_for(set, x.flat() + y.flat())?;
        let lhs = set.norm(&sum)?;
        let rhs = xs_norm - ys_norm + ty.value - tx.value;
        if lhs < rhs - VIOLATION_TOL {
            violation = Some((vec![x, y], rhs - lhs));
            break;
        }
    }
    let analytic = matches!(set, AtomicSet::CanonicalBasis { .. } | AtomicSet::RankOne { .. });
    let (verdict, counterexample, margin) = match violation {
        Some((pair, margin)) => (Verdict::Falsified, Some(pair), margin),
        None if analytic => (Verdict::AnalyticTrue, None, 0.0),
        None => (Verdict::PassedSampling, None, 0.0),
    };
    Ok(StructuralReport {
        property: PropertyKind::Splittable,
        s,
        verdict,
        counterexample,
        trials,
        seed,
        margin,
    })
}

/// Check that unit-coefficient combinations of at most s atoms have
/// atomic norm equal to their term count.
pub fn check_s_even(set: &AtomicSet, s: usize, trials: usize, seed: u64) -> Result<StructuralReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if s == 0 || s > set.max_sparsity() {
        return Err(Error::SparsityOutOfRange { s, max: set.max_sparsity() });
    }
    match set {
        AtomicSet::CanonicalBasis { .. } => Ok(StructuralReport {
            property: PropertyKind::SEven,
            s,
            verdict: Verdict::AnalyticTrue,
            counterexample: None,
            trials: 0,
            seed,
            margin: 0.0,
        }),
        AtomicSet::FiniteFrame(frame) => {
            // Sufficient condition: the synthesis matrix itself has the
            // (canonical) null space property of order s.
            let coeff_set = AtomicSet::canonical(frame.len());
            if let Ok(op) = MeasurementOperator::new(frame.matrix().clone()) {
                let opts = CertifyOptions { seed, ..CertifyOptions::default() };
                if let Ok(cert) = stable_rho(&coeff_set, &op, s, &opts) {
                    if cert.method == Method::ExactEnumeration && cert.holds == Holds::Yes {
                        return Ok(StructuralReport {
                            property: PropertyKind::SEven,
                            s,
                            verdict: Verdict::AnalyticTrue,
                            counterexample: None,
                            trials: 0,
                            seed,
                            margin: 0.0,
                        });
                    }
                }
            }
            sample_s_even(set, frame.len(), s, trials, seed)
        }
        AtomicSet::RankOne { rows, cols } => {
            // infinitely many atoms: sample random unit rank-one terms
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut violation: Option<(Vec<Signal>, f64)> = None;
            for _ in 0..trials {
                let terms = rng.gen_range(1..=s);
                let mut singulars = Vec::with_capacity(terms);
                let mut left = Vec::with_capacity(terms);
                let mut right = Vec::with_capacity(terms);
                for _ in 0..terms {
                    singulars.push(if rng.gen::<bool>() { 1.0 } else { -1.0 });
                    left.push(super::search::random_unit(*rows, &mut rng));
                    right.push(super::search::random_unit(*cols, &mut rng));
                }
                let dec = SparseDecomposition::RankOne {
                    singulars: singulars.iter().map(|c: &f64| c.abs()).collect(),
                    left: left
                        .iter()
                        .zip(&singulars)
                        .map(|(u, &c)| if c < 0.0 { -u } else { u.clone() })
                        .collect(),
                    right,
                };
                let z = dec.assemble(set)?;
                let norm = set.norm(&z)?;
                if norm < terms as f64 - VIOLATION_TOL {
                    violation = Some((vec![z], terms as f64 - norm));
                    break;
                }
            }
            let (verdict, counterexample, margin) = match violation {
                Some((sig, margin)) => (Verdict::Falsified, Some(sig), margin),
                None => (Verdict::PassedSampling, None, 0.0),
            };
            Ok(StructuralReport {
                property: PropertyKind::SEven,
                s,
                verdict,
                counterexample,
                trials,
                seed,
                margin,
            })
        }
    }
}

fn sample_s_even(
    set: &AtomicSet,
    n_atoms: usize,
    s: usize,
    trials: usize,
    seed: u64,
) -> Result<StructuralReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violation: Option<(Vec<Signal>, f64)> = None;
    for _ in 0..trials {
        let terms = rng.gen_range(1..=s);
        let mut indices: Vec<usize> = Vec::with_capacity(terms);
        while indices.len() < terms {
            let i = rng.gen_range(0..n_atoms);
            if !indices.contains(&i) {
                indices.push(i);
            }
        }
        indices.sort_unstable();
        let coefficients: Vec<f64> =
            (0..terms).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let dec = SparseDecomposition::Atoms { indices, coefficients };
        let z = dec.assemble(set)?;
        let norm = set.norm(&z)?;
        if norm < terms as f64 - VIOLATION_TOL {
            violation = Some((vec![z], terms as f64 - norm));
            break;
        }
    }
    let (verdict, counterexample, margin) = match violation {
        Some((sig, margin)) => (Verdict::Falsified, Some(sig), margin),
        None => (Verdict::PassedSampling, None, 0.0),
    };
    Ok(StructuralReport {
        property: PropertyKind::SEven,
        s,
        verdict,
        counterexample,
        trials,
        seed,
        margin,
    })
}
