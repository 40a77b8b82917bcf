//! Right-hand sides of the recovery guarantees and the
//! minimum-measurement lower bound.

use crate::atoms::AtomicSet;
use crate::error::{Error, Result};
use crate::solvers::MeasurementOperator;

/// Which recovery bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Atomic-norm error bound from the stable NSP:
    /// `(2 + 2 rho)/(1 - rho) * sigma + 4 C_W / ((1 - rho) nu_A) * eps`.
    Stable,
    /// Atomic-norm error bound from the robust NSP:
    /// `2 (1 + rho)/(1 - rho) * sigma + 4 tau / (1 - rho) * eps`.
    Robust,
    /// Euclidean error bound from the strong NSP:
    /// `(2 / nu_A) (C_W / c + 1) * eps + (2 / c) * sigma`.
    Strong,
}

/// Constants extracted from certificates.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoundConstants {
    pub rho: Option<f64>,
    pub tau: Option<f64>,
    pub c: Option<f64>,
}

/// Evaluate the chosen bound. With `nominal_constant` the
/// dimension-based constants (`sqrt(N)`, `sqrt(n1 n2)`) replace the
/// computed equivalence constant.
pub fn theoretical_bound(
    kind: BoundKind,
    set: &AtomicSet,
    op: &MeasurementOperator,
    eps: f64,
    sigma_tail: f64,
    constants: &BoundConstants,
    nominal_constant: bool,
) -> Result<f64> {
    if eps < 0.0 || sigma_tail < 0.0 {
        return Err(Error::InvalidArgument("eps and sigma_tail must be nonnegative".into()));
    }
    let c_w = if nominal_constant {
        set.nominal_equivalence_constant()
    } else {
        set.equivalence_constant().value
    };
    let nu = op.nu();
    match kind {
        BoundKind::Stable => {
            let rho = constants
                .rho
                .ok_or_else(|| Error::InvalidArgument("stable bound needs rho".into()))?;
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::InvalidArgument(format!("rho must be in [0, 1), got {rho}")));
            }
            Ok((2.0 + 2.0 * rho) / (1.0 - rho) * sigma_tail
                + 4.0 * c_w / ((1.0 - rho) * nu) * eps)
        }
        BoundKind::Robust => {
            let rho = constants
                .rho
                .ok_or_else(|| Error::InvalidArgument("robust bound needs rho".into()))?;
            let tau = constants
                .tau
                .ok_or_else(|| Error::InvalidArgument("robust bound needs tau".into()))?;
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::InvalidArgument(format!("rho must be in [0, 1), got {rho}")));
            }
            if tau < 0.0 {
                return Err(Error::InvalidArgument("tau must be nonnegative".into()));
            }
            Ok(2.0 * (1.0 + rho) / (1.0 - rho) * sigma_tail + 4.0 * tau / (1.0 - rho) * eps)
        }
        BoundKind::Strong => {
            let c = constants
                .c
                .ok_or_else(|| Error::InvalidArgument("strong bound needs c".into()))?;
            if c <= 0.0 {
                return Err(Error::InvalidArgument(format!("c must be positive, got {c}")));
            }
            if c.is_infinite() {
                // trivial null space: both error terms vanish as c -> inf
                return Ok(2.0 / nu * eps);
            }
            Ok(2.0 / nu * (c_w / c + 1.0) * eps + 2.0 / c * sigma_tail)
        }
    }
}

/// Minimum number of measurements for uniform recovery over an s-even
/// atomic set with N atoms: `s ln(N / 2s) / (8 ln 3)`.
pub fn min_measurement_bound(s: usize, n: usize) -> Result<f64> {
    if s <= 2 {
        return Err(Error::InvalidArgument(format!("bound requires s > 2, got {s}")));
    }
    if 2 * s > n {
        return Err(Error::InvalidArgument(format!("bound requires 2s <= N, got s={s}, N={n}")));
    }
    Ok(s as f64 * ((n as f64) / (2.0 * s as f64)).ln() / (8.0 * 3.0_f64.ln()))
}
