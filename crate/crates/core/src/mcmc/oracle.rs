//! Brute-force check on the closed-form fixed-effects posterior: integrate the
//! unnormalized powered posterior on a grid with the trapezoid rule.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{NormalPosterior, ZDatum};

pub const MIN_POINTS: usize = 10_001;

/// Mass left at the grid edges, relative to the total, above which the grid is
/// rejected as too narrow.
pub const EDGE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl QuadratureGrid {
    /// Grid of `half_width` standard deviations either side of `center`.
    pub fn around(center: f64, sd: f64, half_width: f64, points: usize) -> Self {
        QuadratureGrid {
            lower: center - half_width * sd,
            upper: center + half_width * sd,
            points,
        }
    }
}

/// Posterior mean and variance of ζ under prior `prior` and the likelihood
/// `Πᵢ N(zᵢ | ζ, φᵢ)^{αᵢ}`.
pub fn quadrature_oracle_fixed(
    prior: &NormalPosterior,
    data: &[ZDatum],
    grid: &QuadratureGrid,
) -> Result<(f64, f64)> {
    if grid.points < MIN_POINTS {
        return Err(Error::Oracle(format!(
            "{} grid points, at least {MIN_POINTS} required",
            grid.points
        )));
    }
    if !(grid.upper > grid.lower) {
        return Err(Error::Oracle("grid upper bound must exceed lower bound".into()));
    }
    let log_density = |x: f64| {
        let mut ld = -0.5 * (2.0 * PI * prior.variance).ln()
            - (x - prior.mean).powi(2) / (2.0 * prior.variance);
        for d in data {
            ld += d.alpha * (-0.5 * (2.0 * PI * d.phi).ln() - (d.z - x).powi(2) / (2.0 * d.phi));
        }
        ld
    };
    let h = (grid.upper - grid.lower) / (grid.points - 1) as f64;
    let xs: Vec<f64> = (0..grid.points).map(|k| grid.lower + h * k as f64).collect();
    let logs: Vec<f64> = xs.iter().map(|&x| log_density(x)).collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();

    let trapezoid = |f: &dyn Fn(usize) -> f64| {
        let n = grid.points;
        let inner: f64 = (1..n - 1).map(f).sum();
        h * (inner + 0.5 * (f(0) + f(n - 1)))
    };
    let total = trapezoid(&|k| weights[k]);
    let edge = weights[0].max(weights[grid.points - 1]) * (grid.upper - grid.lower);
    if edge > EDGE_TOLERANCE * total {
        return Err(Error::Oracle(format!(
            "grid [{}, {}] too narrow: edge mass {:.3e} of total",
            grid.lower,
            grid.upper,
            edge / total
        )));
    }
    let mean = trapezoid(&|k| weights[k] * xs[k]) / total;
    let variance = trapezoid(&|k| weights[k] * (xs[k] - mean).powi(2)) / total;
    Ok((mean, variance))
}
