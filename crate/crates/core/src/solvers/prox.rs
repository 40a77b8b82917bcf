//! Proximal maps used by the splitting solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Componentwise `sign(x_i) * max(|x_i| - tau, 0)`.
pub fn soft_threshold(x: &DVector<f64>, tau: f64) -> DVector<f64> {
    debug_assert!(tau >= 0.0);
    x.map(|v| {
        let m = v.abs() - tau;
        if m > 0.0 {
            v.signum() * m
        } else {
            0.0
        }
    })
}

/// Singular value thresholding: `U soft(S, tau) V^T`.
pub fn sv_threshold(z: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    debug_assert!(tau >= 0.0);
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "sv_threshold: non-finite input".into(),
        ));
    }
    let mut svd = z.clone().svd(true, true);
    for s in svd.singular_values.iter_mut() {
        *s = (*s - tau).max(0.0);
    }
    svd.recompose()
        .map_err(|e| Error::InvalidArgument(format!("svd recompose failed: {e}")))
}

/// Euclidean projection onto the ball of radius `radius` around `center`.
pub fn project_ball(v: &DVector<f64>, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let diff = v - center;
    let n = diff.norm();
    if n <= radius {
        v.clone()
    } else if radius == 0.0 {
        center.clone()
    } else {
        center + diff * (radius / n)
    }
}
