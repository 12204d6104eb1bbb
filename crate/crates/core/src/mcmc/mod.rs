//! Shared sampler machinery: the seeded random stream, chain storage,
//! summaries, DIC, convergence diagnostics and the quadrature oracle.

mod dic;
mod geweke;
mod oracle;
mod summary;
mod trace;

pub use dic::{compute_dic, powered_deviance, DevianceFocus};
pub use geweke::{geweke_z, GEWEKE_BATCHES, GEWEKE_FLAG};
pub use oracle::{quadrature_oracle_fixed, QuadratureGrid};
pub use summary::{percentile, summarize, summarize_draws, transform_chain};
pub use trace::write_trace_csv;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{ModelKind, NormalPosterior};

/// Generator behind every run. Part of the run metadata: chains are only
/// reproducible across builds that use the same stream algorithm.
pub type SamplerRng = ChaCha8Rng;

pub const RNG_ALGORITHM: &str = "ChaCha8Rng/seed_from_u64/stream=chain";

/// Generator for chain `chain` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, chain: usize) -> SamplerRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

pub fn draw_normal<R: Rng + ?Sized>(rng: &mut R, dist: &NormalPosterior) -> f64 {
    let u: f64 = StandardNormal.sample(rng);
    dist.mean + dist.sd() * u
}

/// Draws from IG(shape, rate) as the reciprocal of a Gamma(shape, rate) draw.
/// The gamma sampler is Marsaglia–Tsang with the shape-boosting step for
/// shape < 1, so it is exact for small shapes.
pub fn draw_inverse_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    let gamma = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Numerical {
        module: "mcmc_engine",
        message: format!("gamma({shape}, rate {rate}): {e}"),
    })?;
    let g: f64 = gamma.sample(rng);
    let tau = 1.0 / g;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Numerical {
            module: "mcmc_engine",
            message: format!("inverse gamma draw {tau} from IG({shape}, {rate})"),
        });
    }
    Ok(tau)
}

/// A named sequence of draws, burn-in included.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub name: String,
    pub draws: Vec<f64>,
}

impl Chain {
    pub fn new(name: impl Into<String>, draws: Vec<f64>) -> Self {
        Chain {
            name: name.into(),
            draws,
        }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn post_burn_in(&self, burn_in: usize) -> &[f64] {
        &self.draws[burn_in.min(self.draws.len())..]
    }
}

/// All chains of one sampler run. Every chain has the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSet {
    pub kind: ModelKind,
    pub seed: u64,
    /// Index of the generator stream the run consumed.
    pub stream: usize,
    pub burn_in: usize,
    chains: Vec<Chain>,
}

impl ChainSet {
    pub fn new(
        kind: ModelKind,
        seed: u64,
        stream: usize,
        burn_in: usize,
        chains: Vec<Chain>,
    ) -> Result<Self> {
        if let Some(first) = chains.first() {
            if let Some(bad) = chains.iter().find(|c| c.len() != first.len()) {
                return Err(Error::Numerical {
                    module: "mcmc_engine",
                    message: format!(
                        "chain `{}` has {} draws, expected {}",
                        bad.name,
                        bad.len(),
                        first.len()
                    ),
                });
            }
            if burn_in >= first.len() {
                return Err(Error::Config(format!(
                    "burn-in {burn_in} must be smaller than chain length {}",
                    first.len()
                )));
            }
        }
        Ok(ChainSet {
            kind,
            seed,
            stream,
            burn_in,
            chains,
        })
    }

    pub fn iterations(&self) -> usize {
        self.chains.first().map_or(0, Chain::len)
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn get(&self, name: &str) -> Option<&Chain> {
        self.chains.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.chains.iter().map(|c| c.name.as_str())
    }

    /// Keeps every `step`-th draw, burn-in shrunk accordingly.
    pub fn thin(&self, step: usize) -> Result<ChainSet> {
        if step == 0 {
            return Err(Error::Config("thinning step must be positive".into()));
        }
        let chains = self
            .chains
            .iter()
            .map(|c| Chain::new(c.name.clone(), c.draws.iter().copied().step_by(step).collect()))
            .collect();
        ChainSet::new(
            self.kind,
            self.seed,
            self.stream,
            self.burn_in.div_ceil(step),
            chains,
        )
    }

    pub(crate) fn push_chain(&mut self, chain: Chain) -> Result<()> {
        if !self.chains.is_empty() && chain.len() != self.iterations() {
            return Err(Error::Numerical {
                module: "mcmc_engine",
                message: format!("derived chain `{}` has the wrong length", chain.name),
            });
        }
        self.chains.push(chain);
        Ok(())
    }
}

/// Concatenated post-burn-in draws of `name` over every chain set.
pub fn pooled_draws(sets: &[ChainSet], name: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for set in sets {
        let chain = set.get(name).ok_or_else(|| Error::Numerical {
            module: "mcmc_engine",
            message: format!("no chain named `{name}`"),
        })?;
        out.extend_from_slice(chain.post_burn_in(set.burn_in));
    }
    Ok(out)
}

/// Pooled summary of `name` across chain sets.
pub fn summarize_sets(
    sets: &[ChainSet],
    name: &str,
    level: f64,
) -> Result<crate::model::ParameterSummary> {
    summarize_draws(name, &pooled_draws(sets, name)?, level)
}

/// Geweke z-scores (first 10% against last 50%) for every chain of every set.
pub fn geweke_diagnostics(sets: &[ChainSet]) -> Vec<crate::model::GewekeDiagnostic> {
    sets.iter()
        .enumerate()
        .flat_map(|(c, set)| {
            set.chains().iter().map(move |chain| {
                let z = geweke_z(chain, set.burn_in, 0.1, 0.5).ok();
                crate::model::GewekeDiagnostic {
                    parameter: chain.name.clone(),
                    chain: c,
                    z,
                    flagged: z.is_some_and(|z| !(z.abs() <= GEWEKE_FLAG)),
                }
            })
        })
        .collect()
}
