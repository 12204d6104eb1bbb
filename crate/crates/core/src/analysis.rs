//! End-to-end analysis shared by the command line, the HTTP service and the C
//! interface: ingest, optional attenuation correction, power resolution, model
//! fits and the result document.

use std::thread;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corrections::correct_studies;
use crate::error::{Error, Result};
use crate::fixed::{fit_fixed, FixedMode};
use crate::ingest::{bind_dataset, parse_with, ColumnBinding, DataTable, Delimiter};
use crate::mcmc::{GEWEKE_BATCHES, GEWEKE_FLAG, RNG_ALGORITHM};
use crate::model::{
    InverseGammaPrior, McmcConfig, ModelFit, ModelKind, NormalPosterior, ParameterSummary, Study,
    ZDatum,
};
use crate::power::{resolve_powers, PowerScheme, ThresholdRule};
use crate::random::{fit_random, RandomEffectsPriors};
use crate::regression::{design_from_studies, fit_regression, RegressionPriors};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Fixed,
    #[default]
    Random,
    Regression,
    All,
}

impl std::str::FromStr for ModelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(ModelChoice::Fixed),
            "random" => Ok(ModelChoice::Random),
            "regression" => Ok(ModelChoice::Regression),
            "all" => Ok(ModelChoice::All),
            other => Err(Error::Config(format!(
                "unknown model `{other}` (expected fixed, random, regression or all)"
            ))),
        }
    }
}

/// Full analysis configuration. Field names follow the command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub model: ModelChoice,
    /// Column holding the correlations.
    pub cor: String,
    /// Column holding the sample sizes.
    pub n: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_col: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_uniform: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_rule: Option<String>,
    #[serde(default)]
    pub power_reliability: bool,
    #[serde(default)]
    pub reliability_cols: Vec<String>,
    #[serde(default)]
    pub correct_attenuation: bool,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default = "defaults::prior_mean")]
    pub prior_mean: f64,
    #[serde(default = "defaults::prior_var")]
    pub prior_var: f64,
    #[serde(default = "defaults::tau_hyper")]
    pub tau_shape: f64,
    #[serde(default = "defaults::tau_hyper")]
    pub tau_rate: f64,
    #[serde(default = "defaults::iters")]
    pub iters: usize,
    #[serde(default = "defaults::burnin")]
    pub burnin: usize,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::ci_level")]
    pub ci_level: f64,
    #[serde(default = "defaults::chains")]
    pub chains: usize,
    /// Report the per-study ζᵢ and ρᵢ summaries.
    #[serde(default)]
    pub random_effects: bool,
    #[serde(default)]
    pub fixed_mode: FixedMode,
}

mod defaults {
    use crate::model::{InverseGammaPrior, McmcConfig, NormalPosterior};

    pub fn prior_mean() -> f64 {
        NormalPosterior::default().mean
    }
    pub fn prior_var() -> f64 {
        NormalPosterior::default().variance
    }
    pub fn tau_hyper() -> f64 {
        InverseGammaPrior::default().shape
    }
    pub fn iters() -> usize {
        McmcConfig::default().iterations
    }
    pub fn burnin() -> usize {
        McmcConfig::default().burn_in
    }
    pub fn seed() -> u64 {
        McmcConfig::default().seed
    }
    pub fn ci_level() -> f64 {
        McmcConfig::default().credible_level
    }
    pub fn chains() -> usize {
        1
    }
}

impl AnalysisConfig {
    /// Defaults for everything except the two required bindings.
    pub fn new(cor: impl Into<String>, n: impl Into<String>) -> Self {
        serde_json::from_value(serde_json::json!({ "cor": cor.into(), "n": n.into() }))
            .expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn binding(&self) -> ColumnBinding {
        ColumnBinding {
            cor: self.cor.clone(),
            n: self.n.clone(),
            power: self.power_col.clone(),
            reliability: self.reliability_cols.clone(),
            covariates: self.covariates.clone(),
            label: self.label.clone(),
        }
    }

    pub fn power_scheme(&self) -> Result<PowerScheme> {
        let chosen = [
            self.power_col.is_some(),
            self.power_uniform.is_some(),
            self.power_rule.is_some(),
            self.power_reliability,
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if chosen > 1 {
            return Err(Error::Config(
                "choose at most one of power_col, power_uniform, power_rule, power_reliability".into(),
            ));
        }
        let scheme = if self.power_col.is_some() {
            PowerScheme::FromColumn
        } else if let Some(value) = self.power_uniform {
            PowerScheme::Uniform { value }
        } else if let Some(rule) = &self.power_rule {
            PowerScheme::ThresholdRule { rule: rule.parse::<ThresholdRule>()? }
        } else if self.power_reliability {
            PowerScheme::ReliabilityAsPower
        } else {
            PowerScheme::default()
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn mcmc(&self, seed: u64) -> McmcConfig {
        McmcConfig {
            iterations: self.iters,
            burn_in: self.burnin,
            seed,
            credible_level: self.ci_level,
            chains: self.chains,
            ..McmcConfig::default()
        }
    }

    pub fn zeta_prior(&self) -> Result<NormalPosterior> {
        NormalPosterior::new(self.prior_mean, self.prior_var)
    }

    pub fn tau_prior(&self) -> Result<InverseGammaPrior> {
        InverseGammaPrior::new(self.tau_shape, self.tau_rate)
    }

    /// Models to fit, each with its derived seed.
    pub fn planned_models(&self) -> Result<Vec<(ModelKind, u64)>> {
        match self.model {
            ModelChoice::Fixed => Ok(vec![(ModelKind::Fixed, self.seed)]),
            ModelChoice::Random => Ok(vec![(ModelKind::Random, self.seed)]),
            ModelChoice::Regression => {
                if self.covariates.is_empty() {
                    return Err(Error::Config("the regression model needs at least one covariate".into()));
                }
                Ok(vec![(ModelKind::Regression, self.seed)])
            }
            ModelChoice::All => {
                let mut plan = vec![
                    (ModelKind::Fixed, self.seed),
                    (ModelKind::Random, self.seed.wrapping_add(1)),
                ];
                if !self.covariates.is_empty() {
                    plan.push((ModelKind::Regression, self.seed.wrapping_add(2)));
                }
                Ok(plan)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.power_scheme()?;
        self.zeta_prior()?;
        self.tau_prior()?;
        self.mcmc(self.seed).validate()?;
        self.planned_models()?;
        Ok(())
    }
}

/// The study data after binding, correction and power resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub studies: Vec<Study>,
    pub data: Vec<ZDatum>,
    pub scheme: PowerScheme,
}

pub fn prepare(table: &DataTable, config: &AnalysisConfig) -> Result<PreparedData> {
    let scheme = config.power_scheme()?;
    let mut studies = bind_dataset(table, &config.binding())?;
    if config.correct_attenuation {
        studies = correct_studies(&studies)?;
    }
    let alphas = resolve_powers(&studies, &scheme)?;
    let data = studies
        .iter()
        .zip(alphas)
        .map(|(s, a)| ZDatum::from_study(s, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedData { studies, data, scheme })
}

pub fn fit_model(
    kind: ModelKind,
    seed: u64,
    prepared: &PreparedData,
    config: &AnalysisConfig,
) -> Result<ModelFit> {
    let mcmc = config.mcmc(seed);
    match kind {
        ModelKind::Fixed => fit_fixed(&prepared.data, &config.zeta_prior()?, &mcmc, config.fixed_mode),
        ModelKind::Random => {
            let priors = RandomEffectsPriors {
                zeta: config.zeta_prior()?,
                tau: config.tau_prior()?,
            };
            fit_random(&prepared.data, &priors, &mcmc)
        }
        ModelKind::Regression => {
            let design = design_from_studies(&prepared.studies, &config.covariates)?;
            let priors =
                RegressionPriors::uniform(design.coefficients(), config.zeta_prior()?, config.tau_prior()?);
            fit_regression(&prepared.data, &design, &priors, &mcmc)
        }
    }
}

/// A completed analysis: the fits and the document built from them.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub fits: Vec<ModelFit>,
    pub document: ResultDocument,
}

impl Analysis {
    pub fn fit(&self, kind: ModelKind) -> Option<&ModelFit> {
        self.fits.iter().find(|f| f.kind == kind)
    }
}

/// Parses `text`, fits the configured models and builds the result document.
pub fn run_analysis(text: &str, delimiter: Delimiter, config: &AnalysisConfig) -> Result<Analysis> {
    let started = now();
    config.validate()?;
    let table = parse_with(text, delimiter)?;
    let prepared = prepare(&table, config)?;
    let plan = config.planned_models()?;
    let fits = if plan.len() == 1 {
        vec![fit_model(plan[0].0, plan[0].1, &prepared, config)?]
    } else {
        let prepared = &prepared;
        thread::scope(|scope| {
            let handles: Vec<_> = plan
                .iter()
                .map(|&(kind, seed)| scope.spawn(move || fit_model(kind, seed, prepared, config)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("model fit panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    };
    let document = ResultDocument::build(
        config,
        &prepared,
        DataInfo {
            rows: table.rows.len(),
            delimiter,
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        },
        &plan,
        &fits,
        Timestamps { started, finished: now() },
    );
    Ok(Analysis { fits, document })
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub meta: Meta,
    pub parameters: Vec<ParameterRow>,
    pub dic: Vec<DicRow>,
    pub diagnostics: Vec<DiagnosticRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub seed: u64,
    pub rng: String,
    pub power_scheme: PowerScheme,
    pub config: AnalysisConfig,
    pub data: DataInfo,
    pub models: Vec<ModelRun>,
    pub conventions: Conventions,
    /// Wall-clock times; the only part of the document that varies between
    /// identical runs.
    pub timestamps: Timestamps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataInfo {
    pub rows: usize,
    pub delimiter: Delimiter,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRun {
    pub model: ModelKind,
    pub seed: u64,
    /// Iterations per chain; 0 for the closed-form fixed-effects path.
    pub iterations: usize,
    pub burn_in: usize,
    pub chains: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub credible_interval: String,
    pub deviance: String,
    pub dic_focus: String,
    pub geweke: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            credible_interval: "equal-tail percentiles, linear interpolation between order statistics".into(),
            deviance: "sum of alpha_i * (ln(2 pi phi_i) + (z_i - mu_i)^2 / phi_i)".into(),
            dic_focus: "fixed: zeta; random and regression: zeta_i".into(),
            geweke: format!(
                "first 10% vs last 50% of retained draws, batch means with {GEWEKE_BATCHES} batches, flagged when |z| > {GEWEKE_FLAG}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started: String,
    pub finished: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRow {
    pub model: ModelKind,
    #[serde(flatten)]
    pub summary: ParameterSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DicRow {
    pub model: ModelKind,
    pub dic: f64,
    pub d_bar: f64,
    pub d_hat: f64,
    pub p_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub model: ModelKind,
    pub parameter: String,
    pub chain: usize,
    pub z: Option<f64>,
    pub flagged: bool,
}

/// DIC ranking of the models fitted under the one power scheme of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub power_scheme: String,
    pub preferred: ModelKind,
    pub ranking: Vec<RankedModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub model: ModelKind,
    pub dic: f64,
}

fn is_per_study(name: &str) -> bool {
    name.starts_with("zeta[") || name.starts_with("rho[")
}

impl ResultDocument {
    fn build(
        config: &AnalysisConfig,
        prepared: &PreparedData,
        data: DataInfo,
        plan: &[(ModelKind, u64)],
        fits: &[ModelFit],
        timestamps: Timestamps,
    ) -> Self {
        let models = plan
            .iter()
            .zip(fits)
            .map(|(&(model, seed), fit)| ModelRun {
                model,
                seed,
                iterations: fit.chains.first().map_or(0, |c| c.iterations()),
                burn_in: if fit.chains.is_empty() { 0 } else { config.burnin },
                chains: fit.chains.len(),
            })
            .collect();
        let parameters = fits
            .iter()
            .flat_map(|fit| {
                fit.parameters
                    .iter()
                    .filter(|p| config.random_effects || !is_per_study(&p.name))
                    .map(|p| ParameterRow { model: fit.kind, summary: p.clone() })
            })
            .collect();
        let dic: Vec<DicRow> = fits
            .iter()
            .map(|f| DicRow {
                model: f.kind,
                dic: f.dic.dic,
                d_bar: f.dic.d_bar,
                d_hat: f.dic.d_hat,
                p_d: f.dic.p_d,
            })
            .collect();
        let diagnostics = fits
            .iter()
            .flat_map(|fit| {
                fit.diagnostics
                    .iter()
                    .filter(|d| config.random_effects || !is_per_study(&d.parameter))
                    .map(|d| DiagnosticRow {
                        model: fit.kind,
                        parameter: d.parameter.clone(),
                        chain: d.chain,
                        z: d.z,
                        flagged: d.flagged,
                    })
            })
            .collect();
        let comparison = (config.model == ModelChoice::All).then(|| {
            let mut ranking: Vec<RankedModel> =
                dic.iter().map(|d| RankedModel { model: d.model, dic: d.dic }).collect();
            ranking.sort_by(|a, b| a.dic.total_cmp(&b.dic));
            Comparison {
                power_scheme: prepared.scheme.to_string(),
                preferred: ranking[0].model,
                ranking,
            }
        });
        ResultDocument {
            meta: Meta {
                version: VERSION.to_string(),
                seed: config.seed,
                rng: RNG_ALGORITHM.to_string(),
                power_scheme: prepared.scheme.clone(),
                config: config.clone(),
                data,
                models,
                conventions: Conventions::default(),
                timestamps,
            },
            parameters,
            dic,
            diagnostics,
            comparison,
        }
    }

    pub fn parameter(&self, model: ModelKind, name: &str) -> Option<&ParameterSummary> {
        self.parameters
            .iter()
            .find(|p| p.model == model && p.summary.name == name)
            .map(|p| &p.summary)
    }

    /// Pretty JSON with a trailing newline; the form written by every front end.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("result document: {e}")))
    }

    /// The document with both timestamps blanked, for determinism checks.
    pub fn without_timestamps(&self) -> Self {
        let mut doc = self.clone();
        doc.meta.timestamps = Timestamps { started: String::new(), finished: String::new() };
        doc
    }
}
