//! Fixed-effects posterior under power priors, in closed form.
//!
//! With prior N(ζ₀, ψ₀) and studies (zᵢ, φᵢ, αᵢ) the posterior of the common
//! effect is normal with precision `1/ψ₀ + Σ αᵢ/φᵢ` and mean
//! `(ζ₀/ψ₀ + Σ αᵢzᵢ/φᵢ) / precision`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::Result;
use crate::fisher::inv_fisher_z;
use crate::mcmc::{
    self, chain_rng, compute_dic, draw_normal, geweke_diagnostics, summarize_draws,
    summarize_sets, transform_chain, Chain, ChainSet, DevianceFocus,
};
use crate::model::{
    names, Dic, McmcConfig, ModelFit, ModelKind, NormalPosterior, ParameterSummary, Study,
    ZDatum,
};
use crate::power::{resolve_powers, PowerScheme};

/// Draws used for the back-transformed ρ summary in analytic mode.
pub const RHO_DRAWS: usize = 20_000;

/// Posterior after one powered study.
pub fn posterior_update(prior: &NormalPosterior, datum: &ZDatum) -> NormalPosterior {
    if datum.alpha == 0.0 {
        return *prior;
    }
    let precision = 1.0 / prior.variance + datum.alpha / datum.phi;
    NormalPosterior {
        mean: (prior.mean / prior.variance + datum.alpha * datum.z / datum.phi) / precision,
        variance: 1.0 / precision,
    }
}

/// Posterior after all studies at once. Equal to folding [`posterior_update`]
/// in any order.
pub fn combine_studies(prior: &NormalPosterior, data: &[ZDatum]) -> NormalPosterior {
    if data.iter().all(|d| d.alpha == 0.0) {
        return *prior;
    }
    let (weighted, precision) = data.iter().fold(
        (prior.mean / prior.variance, 1.0 / prior.variance),
        |(num, den), d| (num + d.alpha * d.z / d.phi, den + d.alpha / d.phi),
    );
    NormalPosterior {
        mean: weighted / precision,
        variance: 1.0 / precision,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedMode {
    /// ζ summarized from the closed form, ρ from independent posterior draws.
    #[default]
    Analytic,
    /// ζ summarized from `iterations` independent posterior draws, treated as a
    /// chain like the samplers' output.
    MonteCarlo,
}

pub fn fixed_effects_fit(
    studies: &[Study],
    scheme: &PowerScheme,
    prior: &NormalPosterior,
    config: &McmcConfig,
    mode: FixedMode,
) -> Result<ModelFit> {
    let alphas = resolve_powers(studies, scheme)?;
    let data = studies
        .iter()
        .zip(alphas)
        .map(|(s, a)| ZDatum::from_study(s, a))
        .collect::<Result<Vec<_>>>()?;
    fit_fixed(&data, prior, config, mode)
}

pub fn fit_fixed(
    data: &[ZDatum],
    prior: &NormalPosterior,
    config: &McmcConfig,
    mode: FixedMode,
) -> Result<ModelFit> {
    config.validate()?;
    let post = combine_studies(prior, data);
    match mode {
        FixedMode::Analytic => {
            let zeta = normal_summary(names::ZETA, &post, config.credible_level);
            let mut rng = chain_rng(config.seed, 0);
            let draws: Vec<f64> = (0..RHO_DRAWS)
                .map(|_| inv_fisher_z(draw_normal(&mut rng, &post)))
                .collect();
            let rho = summarize_draws(names::RHO, &draws, config.credible_level)?;
            Ok(ModelFit {
                kind: ModelKind::Fixed,
                parameters: vec![zeta, rho],
                dic: analytic_dic(data, &post),
                diagnostics: Vec::new(),
                chains: Vec::new(),
            })
        }
        FixedMode::MonteCarlo => {
            let sets = (0..config.chains)
                .map(|c| {
                    let mut rng = chain_rng(config.seed, c);
                    let zeta = Chain::new(
                        names::ZETA,
                        (0..config.iterations).map(|_| draw_normal(&mut rng, &post)).collect(),
                    );
                    let rho = transform_chain(&zeta, names::RHO, inv_fisher_z);
                    ChainSet::new(ModelKind::Fixed, config.seed, c, config.burn_in, vec![zeta, rho])
                })
                .collect::<Result<Vec<_>>>()?;
            let parameters = [names::ZETA, names::RHO]
                .iter()
                .map(|n| summarize_sets(&sets, n, config.credible_level))
                .collect::<Result<Vec<_>>>()?;
            Ok(ModelFit {
                kind: ModelKind::Fixed,
                parameters,
                dic: compute_dic(data, &sets, DevianceFocus::Pooled)?,
                diagnostics: geweke_diagnostics(&sets),
                chains: sets,
            })
        }
    }
}

fn normal_summary(name: &str, post: &NormalPosterior, level: f64) -> ParameterSummary {
    let standard = Normal::standard();
    let q = standard.inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let sd = post.sd();
    let (ci_low, ci_high) = (post.mean - q * sd, post.mean + q * sd);
    ParameterSummary {
        name: name.to_string(),
        mean: post.mean,
        sd,
        ci_low,
        ci_high,
        significant: ci_low > 0.0 || ci_high < 0.0,
    }
}

/// Exact DIC for a normal posterior: E[(z − ζ)²] = (z − m)² + v.
fn analytic_dic(data: &[ZDatum], post: &NormalPosterior) -> Dic {
    let d_hat = mcmc::powered_deviance(data, |_| post.mean);
    let d_bar: f64 = data
        .iter()
        .filter(|d| d.alpha != 0.0)
        .map(|d| {
            d.alpha
                * ((2.0 * PI * d.phi).ln() + ((d.z - post.mean).powi(2) + post.variance) / d.phi)
        })
        .sum();
    Dic::from_parts(d_bar, d_hat)
}
