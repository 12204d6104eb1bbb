//! Random-effects model `zᵢ = ζᵢ + eᵢ`, `ζᵢ = ζ + vᵢ` with a power-weighted
//! likelihood, sampled by Gibbs sweeps in the order ζᵢ (all studies), τ, ζ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::inv_fisher_z;
use crate::mcmc::{
    chain_rng, compute_dic, draw_inverse_gamma, draw_normal, geweke_diagnostics, summarize_sets,
    transform_chain, Chain, ChainSet, DevianceFocus, SamplerRng,
};
use crate::model::{
    names, InverseGammaPrior, McmcConfig, ModelFit, ModelKind, NormalPosterior, Study, ZDatum,
};
use crate::power::{resolve_powers, PowerScheme};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RandomEffectsPriors {
    pub zeta: NormalPosterior,
    pub tau: InverseGammaPrior,
}

/// Current position of the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomEffectsState {
    pub zeta: f64,
    pub tau: f64,
    pub zeta_i: Vec<f64>,
}

/// ζᵢ | ζ, τ, zᵢ: the study's datum and the pooled level, weighted by their
/// precisions `αᵢ/φᵢ` and `1/τ`.
pub fn conditional_zeta_i(zeta: f64, tau: f64, datum: &ZDatum) -> NormalPosterior {
    // A silenced study leaves the population draw untouched, bit for bit.
    if datum.alpha == 0.0 {
        return NormalPosterior { mean: zeta, variance: tau };
    }
    let precision = 1.0 / tau + datum.alpha / datum.phi;
    NormalPosterior {
        mean: (zeta / tau + datum.z * datum.alpha / datum.phi) / precision,
        variance: 1.0 / precision,
    }
}

/// τ | ζᵢ, ζ ~ IG(δ₀ + m/2, γ₀ + Σ(ζᵢ − ζ)²/2).
pub fn conditional_tau(zeta_i: &[f64], zeta: f64, prior: &InverseGammaPrior) -> InverseGammaPrior {
    let ss: f64 = zeta_i.iter().map(|z| (z - zeta).powi(2)).sum();
    InverseGammaPrior {
        shape: prior.shape + zeta_i.len() as f64 / 2.0,
        rate: prior.rate + ss / 2.0,
    }
}

/// ζ | ζᵢ, τ.
pub fn conditional_zeta(zeta_i: &[f64], tau: f64, prior: &NormalPosterior) -> NormalPosterior {
    let m = zeta_i.len() as f64;
    let sum: f64 = zeta_i.iter().sum();
    let precision = m / tau + 1.0 / prior.variance;
    NormalPosterior {
        mean: (sum / tau + prior.mean / prior.variance) / precision,
        variance: 1.0 / precision,
    }
}

pub fn random_effects_fit(
    studies: &[Study],
    scheme: &PowerScheme,
    priors: &RandomEffectsPriors,
    config: &McmcConfig,
) -> Result<ModelFit> {
    let alphas = resolve_powers(studies, scheme)?;
    let data = studies
        .iter()
        .zip(alphas)
        .map(|(s, a)| ZDatum::from_study(s, a))
        .collect::<Result<Vec<_>>>()?;
    fit_random(&data, priors, config)
}

pub fn fit_random(
    data: &[ZDatum],
    priors: &RandomEffectsPriors,
    config: &McmcConfig,
) -> Result<ModelFit> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Config("random-effects model needs at least one study".into()));
    }
    let sets = (0..config.chains)
        .map(|c| sample_random_effects(data, priors, config, c))
        .collect::<Result<Vec<_>>>()?;

    let m = data.len();
    let mut order = vec![names::ZETA.to_string(), names::TAU.to_string(), names::RHO.to_string()];
    order.extend((0..m).map(names::zeta_i));
    order.extend((0..m).map(names::rho_i));
    let parameters = order
        .iter()
        .map(|n| summarize_sets(&sets, n, config.credible_level))
        .collect::<Result<Vec<_>>>()?;

    Ok(ModelFit {
        kind: ModelKind::Random,
        parameters,
        dic: compute_dic(data, &sets, DevianceFocus::PerStudy)?,
        diagnostics: geweke_diagnostics(&sets),
        chains: sets,
    })
}

/// One chain of `config.iterations` sweeps on generator stream `stream`.
/// Chains: `zeta`, `tau`, `zeta[i]`, then the back-transformed `rho`, `rho[i]`.
pub fn sample_random_effects(
    data: &[ZDatum],
    priors: &RandomEffectsPriors,
    config: &McmcConfig,
    stream: usize,
) -> Result<ChainSet> {
    config.validate()?;
    let mut rng = chain_rng(config.seed, stream);
    let m = data.len();
    let r = config.iterations;
    let mut state = RandomEffectsState {
        zeta: config.init_zeta,
        tau: config.init_tau,
        zeta_i: vec![0.0; m],
    };
    let mut zeta_draws = Vec::with_capacity(r);
    let mut tau_draws = Vec::with_capacity(r);
    let mut study_draws = vec![Vec::with_capacity(r); m];
    for _ in 0..r {
        sweep(&mut rng, data, priors, &mut state)?;
        zeta_draws.push(state.zeta);
        tau_draws.push(state.tau);
        for (chain, &v) in study_draws.iter_mut().zip(&state.zeta_i) {
            chain.push(v);
        }
    }
    let zeta = Chain::new(names::ZETA, zeta_draws);
    let rho = transform_chain(&zeta, names::RHO, inv_fisher_z);
    let mut chains = vec![zeta, Chain::new(names::TAU, tau_draws)];
    let study_chains: Vec<Chain> = study_draws
        .into_iter()
        .enumerate()
        .map(|(i, d)| Chain::new(names::zeta_i(i), d))
        .collect();
    let rho_i: Vec<Chain> = study_chains
        .iter()
        .enumerate()
        .map(|(i, c)| transform_chain(c, names::rho_i(i), inv_fisher_z))
        .collect();
    chains.extend(study_chains);
    let mut set = ChainSet::new(ModelKind::Random, config.seed, stream, config.burn_in, chains)?;
    set.push_chain(rho)?;
    for c in rho_i {
        set.push_chain(c)?;
    }
    Ok(set)
}

/// One Gibbs sweep.
pub fn sweep(
    rng: &mut SamplerRng,
    data: &[ZDatum],
    priors: &RandomEffectsPriors,
    state: &mut RandomEffectsState,
) -> Result<()> {
    for (zi, d) in state.zeta_i.iter_mut().zip(data) {
        *zi = draw_normal(rng, &conditional_zeta_i(state.zeta, state.tau, d));
    }
    let ig = conditional_tau(&state.zeta_i, state.zeta, &priors.tau);
    state.tau = draw_inverse_gamma(rng, ig.shape, ig.rate)?;
    state.zeta = draw_normal(rng, &conditional_zeta(&state.zeta_i, state.tau, &priors.zeta));
    Ok(())
}
