//! Fisher z-transformation of a correlation and its sampling variance.

use crate::error::{Error, Result};

/// Correlations this close to ±1 are rejected rather than clamped.
pub const BOUNDARY_MARGIN: f64 = 1e-12;

/// Largest f64 strictly below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// `z = ½ ln((1 + r) / (1 − r))`.
pub fn fisher_z(r: f64) -> Result<f64> {
    if !r.is_finite() || r.abs() >= 1.0 - BOUNDARY_MARGIN {
        return Err(Error::Domain(format!(
            "correlation {r} is outside (-1, 1); its Fisher z is infinite"
        )));
    }
    // Evaluated on |r| so that the transform is odd to the bit.
    Ok(r.abs().atanh().copysign(r))
}

/// Back-transform `(e^{2z} − 1) / (e^{2z} + 1)`, evaluated as `tanh(z)`.
///
/// The result is kept strictly inside (−1, 1) even where `tanh` rounds to ±1.
pub fn inv_fisher_z(z: f64) -> f64 {
    z.abs().tanh().clamp(0.0, BELOW_ONE).copysign(z)
}

/// Sampling variance of z, `1 / (n − 3)`.
pub fn z_variance(n: u64) -> Result<f64> {
    if n < 4 {
        return Err(Error::Domain(format!(
            "sample size {n} < 4: variance 1/(n-3) undefined or non-positive"
        )));
    }
    Ok(1.0 / (n - 3) as f64)
}
