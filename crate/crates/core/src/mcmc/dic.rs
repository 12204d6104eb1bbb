use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{names, Dic, ZDatum};

use super::ChainSet;

/// Which parameters the deviance is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DevianceFocus {
    /// Every study's mean is the pooled `zeta` (fixed effects).
    Pooled,
    /// Study `i` has its own `zeta[i]` (random effects, meta-regression).
    PerStudy,
}

/// Power-weighted deviance `Σ αᵢ·[ln(2πφᵢ) + (zᵢ − μᵢ)²/φᵢ]`.
pub fn powered_deviance(data: &[ZDatum], mu: impl Fn(usize) -> f64) -> f64 {
    data.iter()
        .enumerate()
        .filter(|(_, d)| d.alpha != 0.0)
        .map(|(i, d)| d.alpha * ((2.0 * PI * d.phi).ln() + (d.z - mu(i)).powi(2) / d.phi))
        .sum()
}

/// DIC = D̄ + p_D with p_D = D̄ − D(θ̄), θ̄ the post-burn-in means of the focus
/// parameters. Draws from every chain set are pooled.
pub fn compute_dic(data: &[ZDatum], sets: &[ChainSet], focus: DevianceFocus) -> Result<Dic> {
    let focus_names: Vec<String> = match focus {
        DevianceFocus::Pooled => vec![names::ZETA.to_string()],
        DevianceFocus::PerStudy => (0..data.len()).map(names::zeta_i).collect(),
    };
    let mut sum_dev = 0.0;
    let mut count = 0usize;
    let mut focus_sums = vec![0.0; focus_names.len()];
    for set in sets {
        let chains = focus_names
            .iter()
            .map(|n| {
                set.get(n).map(|c| c.post_burn_in(set.burn_in)).ok_or_else(|| Error::Numerical {
                    module: "mcmc_engine",
                    message: format!("deviance needs chain `{n}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let len = chains.first().map_or(0, |c| c.len());
        for t in 0..len {
            let dev = match focus {
                DevianceFocus::Pooled => powered_deviance(data, |_| chains[0][t]),
                DevianceFocus::PerStudy => powered_deviance(data, |i| chains[i][t]),
            };
            sum_dev += dev;
            for (acc, c) in focus_sums.iter_mut().zip(&chains) {
                *acc += c[t];
            }
        }
        count += len;
    }
    if count == 0 {
        return Err(Error::Config("no post-burn-in draws for DIC".into()));
    }
    let d_bar = sum_dev / count as f64;
    let means: Vec<f64> = focus_sums.iter().map(|s| s / count as f64).collect();
    let d_hat = match focus {
        DevianceFocus::Pooled => powered_deviance(data, |_| means[0]),
        DevianceFocus::PerStudy => powered_deviance(data, |i| means[i]),
    };
    Ok(Dic::from_parts(d_bar, d_hat))
}
