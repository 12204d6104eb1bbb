//! Correction of observed correlations for unreliability of the two measures.
//!
//! Only the correlation changes; the sample size, and so the z-scale sampling
//! variance, is left as observed.

use crate::error::{Error, Result};
use crate::model::Study;

/// `r / sqrt(rel_x · rel_y)`.
pub fn correct_attenuation(r: f64, rel_x: f64, rel_y: f64) -> Result<f64> {
    correct_labeled(r, rel_x, rel_y, "<unlabeled>")
}

fn correct_labeled(r: f64, rel_x: f64, rel_y: f64, label: &str) -> Result<f64> {
    if !r.is_finite() || r.abs() >= 1.0 {
        return Err(Error::Domain(format!("correlation {r} is outside (-1, 1)")));
    }
    for rel in [rel_x, rel_y] {
        if !(rel > 0.0 && rel <= 1.0) {
            return Err(Error::InvariantViolation {
                row: 0,
                field: "reliability".into(),
                message: format!("study {label}: reliability {rel} outside (0, 1]"),
            });
        }
    }
    if rel_x == 1.0 && rel_y == 1.0 {
        return Ok(r);
    }
    let corrected = r / (rel_x * rel_y).sqrt();
    if corrected.abs() >= 1.0 {
        return Err(Error::Overcorrection {
            label: label.to_string(),
            corrected,
        });
    }
    Ok(corrected)
}

/// Applies the correction to every study, replacing the observed correlation.
pub fn correct_studies(studies: &[Study]) -> Result<Vec<Study>> {
    studies
        .iter()
        .map(|s| {
            let r = correct_labeled(s.r, s.reliability_x(), s.reliability_y(), &s.label)?;
            Ok(Study { r, ..s.clone() })
        })
        .collect()
}
