//! Certification of the four null space properties (plain, stable,
//! robust, strong), the structural properties of atomic sets
//! (splittable, s-even), and evaluation of the recovery bounds they
//! imply.
//!
//! Exactness frontier: suprema over null spaces are maximizations of
//! convex functions, so exact certificates are only produced where an
//! exhaustive method exists at desk scale — support/sign LP enumeration
//! for the canonical basis, closed forms on one-dimensional null
//! spaces, and dense sphere discretization with local refinement up to
//! null dimension 3. Everything else is a labeled one-sided bound that
//! never upgrades to `holds = Yes`.

mod bounds;
mod search;
mod simplex;
mod stable;
mod strong;
mod structural;

pub use bounds::{min_measurement_bound, theoretical_bound, BoundConstants, BoundKind};
pub use simplex::{simplex_max, LpOutcome};
pub use stable::{check_plain_nsp, stable_rho};
pub use strong::{robust_params, strong_constant};
pub use structural::{check_s_even, check_splittable, PropertyKind, StructuralReport, Verdict};

pub(crate) use search::random_unit as search_random_unit;

use nalgebra::DVector;
use serde::Serialize;

use crate::atoms::{AtomicSet, Signal};
use crate::error::Result;
use crate::solvers::MeasurementOperator;

/// Which null space property a certificate is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NspKind {
    Plain,
    Stable,
    Robust,
    Strong,
}

/// How the reported constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    ExactEnumeration,
    SampledBound,
}

/// Three-valued verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Holds {
    Yes,
    No,
    Unknown,
}

/// Extremal point(s) achieving the reported constant.
#[derive(Debug, Clone)]
pub struct Witness {
    /// Null-space (or ambient, for robust) vector.
    pub z: Signal,
    /// The sparse competitor, when the property compares against one.
    pub v: Option<Signal>,
    /// Support achieving the constant, when meaningful.
    pub support: Option<Vec<usize>>,
}

/// Result of certifying one null space property.
#[derive(Debug, Clone)]
pub struct NspCertificate {
    pub kind: NspKind,
    pub s: usize,
    pub holds: Holds,
    /// Stable-NSP constant; `f64::INFINITY` for the degenerate case.
    pub rho: Option<f64>,
    /// Robust-NSP constant (sampled lower bound).
    pub tau: Option<f64>,
    /// Strong-NSP constant; `f64::INFINITY` for a trivial null space.
    pub c: Option<f64>,
    pub method: Method,
    pub witness: Option<Witness>,
    pub seed: u64,
    pub samples: usize,
    /// Set when an enumeration limit forced a downgrade to sampling.
    pub downgraded: bool,
}

/// Knobs for certification searches.
#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    /// Max supports x sign patterns for exact canonical enumeration.
    pub enum_limit: usize,
    /// Sampling directions for sampled bounds.
    pub samples: usize,
    /// Multistart count for local refinement.
    pub multistarts: usize,
    /// Initial hill-climb step.
    pub step: f64,
    /// Base seed recorded in every certificate.
    pub seed: u64,
    /// Grid size for dense one-angle discretization (null dim 2).
    pub grid_1d: usize,
    /// Grid size for dense sphere discretization (null dim 3).
    pub grid_2d: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            enum_limit: 1_000_000,
            samples: 10_000,
            multistarts: 32,
            step: 1e-2,
            seed: 0,
            grid_1d: 20_001,
            grid_2d: 20_000,
        }
    }
}

impl NspCertificate {
    /// Re-evaluate the stored witness against the defining quantity of
    /// the certified property. Returns the reproduced constant.
    pub fn verify_witness(&self, set: &AtomicSet, op: &MeasurementOperator) -> Result<Option<f64>> {
        let Some(w) = &self.witness else { return Ok(None) };
        match self.kind {
            NspKind::Stable | NspKind::Plain => {
                let t = set.tail(&w.z, self.s)?;
                let head = set.norm(&t.minimizer.assemble(set)?)?;
                if t.value <= 1e-12 * head.max(1.0) {
                    return Ok(Some(f64::INFINITY));
                }
                Ok(Some(head / t.value))
            }
            NspKind::Strong => {
                let t = set.tail(&w.z, self.s)?;
                let head = set.norm(&t.minimizer.assemble(set)?)?;
                Ok(Some((t.value - head) / w.z.norm2()))
            }
            NspKind::Robust => {
                let rho = self.rho.expect("robust certificate carries rho");
                let t = set.tail(&w.z, self.s)?;
                let head = set.norm(&t.minimizer.assemble(set)?)?;
                let num = (head - rho * t.value).max(0.0);
                let az = op.apply(&w.z)?.norm();
                if az <= 1e-12 {
                    return Ok(Some(f64::INFINITY));
                }
                Ok(Some(num / az))
            }
        }
    }

    /// JSON document per the external certificate schema.
    pub fn to_json(&self) -> serde_json::Value {
        fn num(x: f64) -> serde_json::Value {
            if x.is_finite() {
                serde_json::json!(x)
            } else {
                serde_json::Value::String("inf".into())
            }
        }
        fn csv_inline(v: &DVector<f64>) -> String {
            v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",")
        }
        let witness = self.witness.as_ref().map(|w| {
            serde_json::json!({
                "z": csv_inline(w.z.flat()),
                "v": w.v.as_ref().map(|v| csv_inline(v.flat())),
                "support": w.support,
            })
        });
        serde_json::json!({
            "kind": self.kind,
            "s": self.s,
            "method": self.method,
            "holds": self.holds,
            "constants": {
                "rho": self.rho.map(num),
                "tau": self.tau.map(num),
                "c": self.c.map(num),
            },
            "witness": witness,
            "seed": self.seed,
            "samples": self.samples,
            "downgraded": self.downgraded,
        })
    }
}
