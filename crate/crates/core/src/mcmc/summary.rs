use crate::error::{Error, Result};
use crate::model::ParameterSummary;

use super::Chain;

/// Summary of the draws after `burn_in`: mean, sd, equal-tail credible
/// interval at `level`.
pub fn summarize(chain: &Chain, burn_in: usize, level: f64) -> Result<ParameterSummary> {
    if burn_in >= chain.len() {
        return Err(Error::Config(format!(
            "burn-in {burn_in} must be smaller than chain length {}",
            chain.len()
        )));
    }
    summarize_draws(&chain.name, chain.post_burn_in(burn_in), level)
}

pub fn summarize_draws(name: &str, draws: &[f64], level: f64) -> Result<ParameterSummary> {
    if draws.is_empty() {
        return Err(Error::Config(format!("no draws to summarize for `{name}`")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("credible level {level} must lie in (0, 1)")));
    }
    let n = draws.len() as f64;
    // Shifted by the first draw: exact for constant chains, and less
    // cancellation when the draws sit far from zero.
    let shift = draws[0];
    let mean = shift + draws.iter().map(|x| x - shift).sum::<f64>() / n;
    // 1/n moments: a chain concatenated with itself summarizes identically.
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let ci_low = percentile(&sorted, tail);
    let ci_high = percentile(&sorted, 1.0 - tail);
    Ok(ParameterSummary {
        name: name.to_string(),
        mean,
        sd,
        ci_low,
        ci_high,
        significant: ci_low > 0.0 || ci_high < 0.0,
    })
}

/// Sample quantile of sorted data, linear interpolation between order
/// statistics at position `(n − 1)·p`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Applies `map` to every draw.
pub fn transform_chain(chain: &Chain, name: impl Into<String>, map: impl Fn(f64) -> f64) -> Chain {
    Chain::new(name, chain.draws.iter().map(|&x| map(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::inv_fisher_z;
    use proptest::prelude::*;

    #[test]
    fn mean_after_burn_in() {
        let c = Chain::new("x", vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(summarize(&c, 2, 0.95).unwrap().mean, 3.5);
        assert_eq!(summarize(&c, 2, 0.5).unwrap().mean, 3.5);
    }

    #[test]
    fn constant_chain() {
        let c = Chain::new("x", vec![0.7; 50]);
        let s = summarize(&c, 10, 0.95).unwrap();
        assert_eq!(s.mean, 0.7);
        assert_eq!(s.sd, 0.0);
        assert_eq!((s.ci_low, s.ci_high), (0.7, 0.7));
        assert!(s.significant);
    }

    #[test]
    fn burn_in_too_long() {
        let c = Chain::new("x", vec![1.0, 2.0]);
        assert!(matches!(summarize(&c, 2, 0.95), Err(Error::Config(_))));
    }

    #[test]
    fn interpolated_percentiles() {
        let sorted = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&sorted, 0.0), 1.0);
        assert_eq!(percentile(&sorted, 1.0), 5.0);
        assert_eq!(percentile(&sorted, 0.5), 3.0);
        assert_eq!(percentile(&sorted, 0.125), 1.5);
        let c = Chain::new("x", (0..=100).map(f64::from).collect());
        let s = summarize(&c, 0, 0.95).unwrap();
        assert!((s.ci_low - 2.5).abs() < 1e-12);
        assert!((s.ci_high - 97.5).abs() < 1e-12);
    }

    #[test]
    fn significance_flag() {
        let c = Chain::new("x", (0..=100).map(|i| f64::from(i) - 50.0).collect());
        assert!(!summarize(&c, 0, 0.95).unwrap().significant);
    }

    #[test]
    fn transform_values() {
        let zeros = Chain::new("zeta", vec![0.0; 5]);
        assert!(transform_chain(&zeros, "rho", inv_fisher_z).draws.iter().all(|&x| x == 0.0));
        let z = Chain::new("zeta", vec![0.549; 5]);
        assert!(transform_chain(&z, "rho", inv_fisher_z)
            .draws
            .iter()
            .all(|&x| (x - 0.5).abs() < 5e-4));
    }

    #[test]
    fn transform_does_not_commute_with_mean() {
        // draws (0, 2): mean of tanh = tanh(2)/2 ≈ 0.482, tanh of mean = tanh(1) ≈ 0.762
        let c = Chain::new("zeta", vec![0.0, 2.0]);
        let rho = transform_chain(&c, "rho", inv_fisher_z);
        let mean_of_transform = summarize(&rho, 0, 0.95).unwrap().mean;
        let transform_of_mean = inv_fisher_z(summarize(&c, 0, 0.95).unwrap().mean);
        assert!((mean_of_transform - 0.482_013_7).abs() < 1e-6);
        assert!((transform_of_mean - 0.761_594_2).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn self_concatenation_keeps_mean_and_sd(draws in prop::collection::vec(-10.0f64..10.0, 2..200)) {
            let a = summarize_draws("x", &draws, 0.9).unwrap();
            let doubled: Vec<f64> = draws.iter().chain(draws.iter()).copied().collect();
            let b = summarize_draws("x", &doubled, 0.9).unwrap();
            prop_assert!((a.mean - b.mean).abs() < 1e-12);
            prop_assert!((a.sd - b.sd).abs() < 1e-12);
            prop_assert!(a.ci_low <= a.ci_high);
        }
    }
}
