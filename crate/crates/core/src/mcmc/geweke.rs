use crate::error::{Error, Result};

use super::Chain;

/// Batches used for the batch-means variance of each window mean.
pub const GEWEKE_BATCHES: usize = 20;

/// |z| above this flags a chain as not converged.
pub const GEWEKE_FLAG: f64 = 2.0;

const MIN_WINDOW: usize = 50;

/// Geweke z-score comparing the mean of the first `frac_a` of the post-burn-in
/// draws with the mean of the last `frac_b`. Window-mean variances come from
/// batch means.
pub fn geweke_z(chain: &Chain, burn_in: usize, frac_a: f64, frac_b: f64) -> Result<f64> {
    if !(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0) {
        return Err(Error::Config(format!(
            "Geweke windows {frac_a} and {frac_b} must be positive and not overlap"
        )));
    }
    let draws = chain.post_burn_in(burn_in);
    let n = draws.len();
    let len_a = (frac_a * n as f64).floor() as usize;
    let len_b = (frac_b * n as f64).floor() as usize;
    if len_a < MIN_WINDOW || len_b < MIN_WINDOW {
        return Err(Error::DiagnosticUnavailable(format!(
            "chain `{}` has {n} post-burn-in draws; each window needs at least {MIN_WINDOW}",
            chain.name
        )));
    }
    let a = &draws[..len_a];
    let b = &draws[n - len_b..];
    let diff = mean(a) - mean(b);
    let var = batch_means_variance(a) + batch_means_variance(b);
    if diff == 0.0 {
        return Ok(0.0);
    }
    Ok(diff / var.sqrt())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Variance of the mean of `x` estimated from the spread of batch means.
fn batch_means_variance(x: &[f64]) -> f64 {
    let size = x.len() / GEWEKE_BATCHES;
    let means: Vec<f64> = x
        .chunks_exact(size)
        .take(GEWEKE_BATCHES)
        .map(mean)
        .collect();
    let k = means.len() as f64;
    let m = mean(&means);
    let var_batch = means.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (k - 1.0);
    var_batch / k
}
