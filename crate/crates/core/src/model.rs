//! Domain types shared by the fixed-effects, random-effects and meta-regression
//! paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher;
use crate::mcmc::ChainSet;

/// One primary study: an observed correlation with its sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub label: String,
    pub r: f64,
    pub n: u64,
    /// Reliability of the first measure, in (0, 1]. `None` means 1.
    pub rel_x: Option<f64>,
    /// Reliability of the second measure, in (0, 1]. `None` means 1.
    pub rel_y: Option<f64>,
    /// Covariate values in the order of the bound covariate names.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub covariates: Vec<Option<f64>>,
    pub power: Option<f64>,
}

impl Study {
    pub fn new(label: impl Into<String>, r: f64, n: u64) -> Result<Self> {
        let study = Study {
            label: label.into(),
            r,
            n,
            rel_x: None,
            rel_y: None,
            covariates: Vec::new(),
            power: None,
        };
        study.validate()?;
        Ok(study)
    }

    pub fn with_reliability(mut self, rel_x: Option<f64>, rel_y: Option<f64>) -> Result<Self> {
        self.rel_x = rel_x;
        self.rel_y = rel_y;
        self.validate()?;
        Ok(self)
    }

    pub fn with_power(mut self, power: f64) -> Result<Self> {
        self.power = Some(power);
        self.validate()?;
        Ok(self)
    }

    pub fn with_covariates(mut self, covariates: Vec<Option<f64>>) -> Self {
        self.covariates = covariates;
        self
    }

    pub fn reliability_x(&self) -> f64 {
        self.rel_x.unwrap_or(1.0)
    }

    pub fn reliability_y(&self) -> f64 {
        self.rel_y.unwrap_or(1.0)
    }

    /// Checks every field invariant. Errors name the offending field so callers
    /// can attach a row number.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| Error::InvariantViolation {
            row: 0,
            field: field.to_string(),
            message,
        };
        if !self.r.is_finite() || self.r.abs() >= 1.0 {
            return Err(bad("r", format!("correlation {} outside (-1, 1)", self.r)));
        }
        if self.n < 4 {
            return Err(bad("n", format!("sample size {} < 4", self.n)));
        }
        for (field, rel) in [("rel_x", self.rel_x), ("rel_y", self.rel_y)] {
            if let Some(v) = rel {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(bad(field, format!("reliability {v} outside (0, 1]")));
                }
            }
        }
        if let Some(a) = self.power {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(bad("power", format!("power {a} is not a finite value >= 0")));
            }
        }
        Ok(())
    }
}

/// A study on the Fisher-z scale, ready for the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZDatum {
    pub z: f64,
    pub phi: f64,
    pub alpha: f64,
}

impl ZDatum {
    pub fn new(z: f64, phi: f64, alpha: f64) -> Result<Self> {
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(Error::Domain(format!("sampling variance {phi} must be positive")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("power {alpha} must be finite and >= 0")));
        }
        if !z.is_finite() {
            return Err(Error::Domain(format!("z value {z} is not finite")));
        }
        Ok(ZDatum { z, phi, alpha })
    }

    /// Builds the datum for a study and its resolved power.
    pub fn from_study(study: &Study, alpha: f64) -> Result<Self> {
        let z = fisher::fisher_z(study.r)?;
        let phi = fisher::z_variance(study.n)?;
        ZDatum::new(z, phi, alpha)
    }

    /// Power-weighted precision `alpha / phi`.
    pub fn weight(&self) -> f64 {
        self.alpha / self.phi
    }
}

/// Normal distribution on the Fisher-z scale, used both as prior and posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPosterior {
    pub mean: f64,
    pub variance: f64,
}

impl NormalPosterior {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::Config(format!(
                "normal distribution needs a finite mean and positive variance, got N({mean}, {variance})"
            )));
        }
        Ok(NormalPosterior { mean, variance })
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn precision(&self) -> f64 {
        1.0 / self.variance
    }
}

impl Default for NormalPosterior {
    /// Diffuse default prior N(0, 10^6) for the pooled effect.
    fn default() -> Self {
        NormalPosterior {
            mean: 0.0,
            variance: 1e6,
        }
    }
}

/// Inverse-gamma prior IG(shape, rate) for the between-study variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseGammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl InverseGammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Config(format!(
                "inverse gamma needs positive shape and rate, got IG({shape}, {rate})"
            )));
        }
        Ok(InverseGammaPrior { shape, rate })
    }
}

impl Default for InverseGammaPrior {
    fn default() -> Self {
        InverseGammaPrior {
            shape: 1e-3,
            rate: 1e-3,
        }
    }
}

/// Sampler controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub init_zeta: f64,
    pub init_tau: f64,
    pub credible_level: f64,
    /// Independent chains; chain `c` uses stream `c` of the seeded generator.
    pub chains: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 10_000,
            burn_in: 4_000,
            seed: 42,
            init_zeta: 0.0,
            init_tau: 1.0,
            credible_level: 0.95,
            chains: 1,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in {} must be smaller than the number of iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if !(self.init_tau > 0.0) || !self.init_tau.is_finite() {
            return Err(Error::Config(format!("initial tau {} must be positive", self.init_tau)));
        }
        if !self.init_zeta.is_finite() {
            return Err(Error::Config("initial zeta must be finite".into()));
        }
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return Err(Error::Config(format!(
                "credible level {} must lie in (0, 1)",
                self.credible_level
            )));
        }
        if self.chains == 0 {
            return Err(Error::Config("at least one chain is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Fixed,
    Random,
    Regression,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Fixed => "fixed",
            ModelKind::Random => "random",
            ModelKind::Regression => "regression",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Posterior summary of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The credible interval excludes zero.
    pub significant: bool,
}

/// Deviance information criterion and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dic {
    pub dic: f64,
    /// Posterior mean deviance.
    pub d_bar: f64,
    /// Deviance at the posterior mean of the focus parameters.
    pub d_hat: f64,
    /// Effective number of parameters.
    pub p_d: f64,
}

impl Dic {
    pub fn from_parts(d_bar: f64, d_hat: f64) -> Self {
        let p_d = d_bar - d_hat;
        Dic {
            dic: d_bar + p_d,
            d_bar,
            d_hat,
            p_d,
        }
    }
}

/// Geweke z-score for one parameter of one chain. `z` is `None` when the chain
/// is too short for the diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeDiagnostic {
    pub parameter: String,
    pub chain: usize,
    pub z: Option<f64>,
    pub flagged: bool,
}

/// Everything a model fit reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub kind: ModelKind,
    pub parameters: Vec<ParameterSummary>,
    pub dic: Dic,
    pub diagnostics: Vec<GewekeDiagnostic>,
    /// Retained draws, one set per chain. Empty for the analytic fixed path.
    pub chains: Vec<ChainSet>,
}

impl ModelFit {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

/// Parameter naming used across fits and result documents.
pub mod names {
    pub const ZETA: &str = "zeta";
    pub const RHO: &str = "rho";
    pub const TAU: &str = "tau";

    pub fn zeta_i(i: usize) -> String {
        format!("zeta[{}]", i + 1)
    }

    pub fn rho_i(i: usize) -> String {
        format!("rho[{}]", i + 1)
    }

    pub fn beta(name: &str) -> String {
        format!("beta[{name}]")
    }
}
