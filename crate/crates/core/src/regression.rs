//! Meta-regression `ζᵢ = xᵢβ + vᵢ`, `vᵢ ~ N(0, τ)`, sampled by Gibbs sweeps in the
//! order ζᵢ, τ, β. Powers enter only the ζᵢ step; the τ and β steps condition on
//! the ζᵢ alone.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::inv_fisher_z;
use crate::mcmc::{
    chain_rng, compute_dic, draw_inverse_gamma, draw_normal, geweke_diagnostics, summarize_sets,
    transform_chain, Chain, ChainSet, DevianceFocus, SamplerRng,
};
use crate::model::{names, InverseGammaPrior, McmcConfig, ModelFit, ModelKind, NormalPosterior, Study, ZDatum};
use crate::power::{resolve_powers, PowerScheme};
use crate::random::conditional_zeta_i;

pub const INTERCEPT: &str = "intercept";

/// Rows `xᵢ = (1, x₁ᵢ, …, x_pᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    covariate_names: Vec<String>,
}

impl DesignMatrix {
    /// Builds the matrix from covariate rows (intercept added) and checks that
    /// `X′X` is invertible.
    pub fn new(rows: &[Vec<f64>], covariate_names: &[String]) -> Result<Self> {
        let p = covariate_names.len();
        let m = rows.len();
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(Error::Config(format!(
                "design row {} has {} covariates, expected {p}",
                i + 1,
                rows[i].len()
            )));
        }
        if m < p + 1 {
            return Err(Error::SingularDesign(format!(
                "{m} studies cannot identify {} coefficients",
                p + 1
            )));
        }
        let x = DMatrix::from_fn(m, p + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("design matrix has non-finite entries".into()));
        }
        let design = DesignMatrix {
            x,
            covariate_names: covariate_names.to_vec(),
        };
        design.check_rank()?;
        Ok(design)
    }

    /// Intercept-only design for `m` studies.
    pub fn intercept_only(m: usize) -> Result<Self> {
        DesignMatrix::new(&vec![Vec::new(); m], &[])
    }

    fn check_rank(&self) -> Result<()> {
        let sv = self.x.clone().svd(false, false).singular_values;
        let max = sv.max();
        let tol = max * f64::EPSILON * self.x.nrows().max(self.x.ncols()) as f64;
        if sv.iter().any(|&s| s <= tol) {
            return Err(Error::SingularDesign(format!(
                "X'X is not invertible (columns: {}); a covariate may be constant or duplicate another",
                self.coefficient_names().join(", ")
            )));
        }
        Ok(())
    }

    pub fn studies(&self) -> usize {
        self.x.nrows()
    }

    pub fn coefficients(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// `intercept` followed by the covariate names.
    pub fn coefficient_names(&self) -> Vec<String> {
        std::iter::once(INTERCEPT.to_string())
            .chain(self.covariate_names.iter().cloned())
            .collect()
    }

    pub fn row_dot(&self, i: usize, beta: &DVector<f64>) -> f64 {
        self.x.row(i).iter().zip(beta.iter()).map(|(a, b)| a * b).sum()
    }

    fn gram(&self) -> DMatrix<f64> {
        self.x.transpose() * &self.x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionPriors {
    /// Prior mean of β, length p + 1.
    pub beta_mean: Vec<f64>,
    /// Diagonal of the prior covariance of β.
    pub beta_var: Vec<f64>,
    pub tau: InverseGammaPrior,
}

impl RegressionPriors {
    /// β ~ N(0, 10⁶ I), τ ~ IG(10⁻³, 10⁻³).
    pub fn diffuse(coefficients: usize) -> Self {
        RegressionPriors {
            beta_mean: vec![0.0; coefficients],
            beta_var: vec![1e6; coefficients],
            tau: InverseGammaPrior::default(),
        }
    }

    /// Every coefficient gets the same normal prior.
    pub fn uniform(coefficients: usize, beta: NormalPosterior, tau: InverseGammaPrior) -> Self {
        RegressionPriors {
            beta_mean: vec![beta.mean; coefficients],
            beta_var: vec![beta.variance; coefficients],
            tau,
        }
    }

    fn validate(&self, coefficients: usize) -> Result<()> {
        if self.beta_mean.len() != coefficients || self.beta_var.len() != coefficients {
            return Err(Error::Config(format!(
                "regression prior has {} means and {} variances for {coefficients} coefficients",
                self.beta_mean.len(),
                self.beta_var.len()
            )));
        }
        if self.beta_var.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("prior variances of beta must be positive".into()));
        }
        Ok(())
    }
}

/// Multivariate normal parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MvNormal {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl MvNormal {
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let chol = self.cov.clone().cholesky().ok_or_else(|| Error::Numerical {
            module: "gibbs_regression",
            message: "covariance of beta is not positive definite".into(),
        })?;
        let u = DVector::from_fn(self.mean.len(), |_, _| StandardNormal.sample(rng));
        Ok(&self.mean + chol.l() * u)
    }
}

/// `β̂ = (X′X)⁻¹X′ζ`.
pub fn least_squares(x: &DesignMatrix, zeta: &[f64]) -> Result<DVector<f64>> {
    if zeta.len() != x.studies() {
        return Err(Error::Config(format!(
            "{} study effects for {} design rows",
            zeta.len(),
            x.studies()
        )));
    }
    let chol = x.gram().cholesky().ok_or_else(|| {
        Error::SingularDesign("X'X is not positive definite".into())
    })?;
    let xtz = x.matrix().transpose() * DVector::from_column_slice(zeta);
    Ok(chol.solve(&xtz))
}

/// β | ζᵢ, τ ~ N(P⁻¹(Ψ₀⁻¹ζ₀ + X′Xβ̂/τ), P⁻¹) with P = Ψ₀⁻¹ + X′X/τ.
pub fn conditional_beta(
    zeta: &[f64],
    tau: f64,
    x: &DesignMatrix,
    priors: &RegressionPriors,
) -> Result<MvNormal> {
    priors.validate(x.coefficients())?;
    let beta_hat = least_squares(x, zeta)?;
    let gram = x.gram();
    let prior_precision = DMatrix::from_diagonal(&DVector::from_iterator(
        priors.beta_var.len(),
        priors.beta_var.iter().map(|v| 1.0 / v),
    ));
    let precision = &prior_precision + &gram / tau;
    let cov = precision
        .cholesky()
        .ok_or_else(|| Error::Numerical {
            module: "gibbs_regression",
            message: "posterior precision of beta is not positive definite".into(),
        })?
        .inverse();
    let cov = (&cov + cov.transpose()) * 0.5;
    let prior_mean = DVector::from_column_slice(&priors.beta_mean);
    let mean = &cov * (prior_precision * prior_mean + (gram * beta_hat) / tau);
    Ok(MvNormal { mean, cov })
}

/// τ | β, ζᵢ ~ IG(δ₀ + m/2, γ₀ + Σ(ζᵢ − xᵢβ)²/2).
pub fn conditional_tau_reg(
    zeta: &[f64],
    beta: &DVector<f64>,
    x: &DesignMatrix,
    prior: &InverseGammaPrior,
) -> InverseGammaPrior {
    let ss: f64 = zeta
        .iter()
        .enumerate()
        .map(|(i, z)| (z - x.row_dot(i, beta)).powi(2))
        .sum();
    InverseGammaPrior {
        shape: prior.shape + zeta.len() as f64 / 2.0,
        rate: prior.rate + ss / 2.0,
    }
}

/// ζᵢ | β, τ: the random-effects conditional with the population mean `xᵢβ`.
pub fn conditional_zeta_i_reg(
    beta: &DVector<f64>,
    tau: f64,
    datum: &ZDatum,
    x: &DesignMatrix,
    row: usize,
) -> NormalPosterior {
    conditional_zeta_i(x.row_dot(row, beta), tau, datum)
}

/// Builds the design from the studies' covariates; a missing value names the
/// study and covariate.
pub fn design_from_studies(studies: &[Study], covariate_names: &[String]) -> Result<DesignMatrix> {
    let rows = studies
        .iter()
        .map(|s| {
            covariate_names
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    s.covariates.get(j).copied().flatten().ok_or_else(|| Error::MissingCovariate {
                        label: s.label.clone(),
                        covariate: name.clone(),
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    DesignMatrix::new(&rows, covariate_names)
}

pub fn meta_regression_fit(
    studies: &[Study],
    covariate_names: &[String],
    scheme: &PowerScheme,
    priors: &RegressionPriors,
    config: &McmcConfig,
) -> Result<ModelFit> {
    let design = design_from_studies(studies, covariate_names)?;
    let alphas = resolve_powers(studies, scheme)?;
    let data = studies
        .iter()
        .zip(alphas)
        .map(|(s, a)| ZDatum::from_study(s, a))
        .collect::<Result<Vec<_>>>()?;
    fit_regression(&data, &design, priors, config)
}

pub fn fit_regression(
    data: &[ZDatum],
    design: &DesignMatrix,
    priors: &RegressionPriors,
    config: &McmcConfig,
) -> Result<ModelFit> {
    config.validate()?;
    priors.validate(design.coefficients())?;
    if data.len() != design.studies() {
        return Err(Error::Config(format!(
            "{} studies for {} design rows",
            data.len(),
            design.studies()
        )));
    }
    let sets = (0..config.chains)
        .map(|c| sample_regression(data, design, priors, config, c))
        .collect::<Result<Vec<_>>>()?;
    let m = data.len();
    let mut order: Vec<String> = design.coefficient_names().iter().map(|n| names::beta(n)).collect();
    order.push(names::TAU.to_string());
    order.extend((0..m).map(names::zeta_i));
    order.extend((0..m).map(names::rho_i));
    let parameters = order
        .iter()
        .map(|n| summarize_sets(&sets, n, config.credible_level))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelFit {
        kind: ModelKind::Regression,
        parameters,
        dic: compute_dic(data, &sets, DevianceFocus::PerStudy)?,
        diagnostics: geweke_diagnostics(&sets),
        chains: sets,
    })
}

/// One chain on generator stream `stream`. β starts at (ζ⁽⁰⁾, 0, …, 0).
pub fn sample_regression(
    data: &[ZDatum],
    design: &DesignMatrix,
    priors: &RegressionPriors,
    config: &McmcConfig,
    stream: usize,
) -> Result<ChainSet> {
    let mut rng = chain_rng(config.seed, stream);
    let m = data.len();
    let k = design.coefficients();
    let r = config.iterations;
    let mut beta = DVector::zeros(k);
    beta[0] = config.init_zeta;
    let mut tau = config.init_tau;
    let mut zeta = vec![0.0; m];
    let mut beta_draws = vec![Vec::with_capacity(r); k];
    let mut tau_draws = Vec::with_capacity(r);
    let mut study_draws = vec![Vec::with_capacity(r); m];
    for _ in 0..r {
        sweep(&mut rng, data, design, priors, &mut zeta, &mut tau, &mut beta)?;
        for (chain, b) in beta_draws.iter_mut().zip(beta.iter()) {
            chain.push(*b);
        }
        tau_draws.push(tau);
        for (chain, &v) in study_draws.iter_mut().zip(&zeta) {
            chain.push(v);
        }
    }
    let mut chains: Vec<Chain> = design
        .coefficient_names()
        .iter()
        .zip(beta_draws)
        .map(|(n, d)| Chain::new(names::beta(n), d))
        .collect();
    chains.push(Chain::new(names::TAU, tau_draws));
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
    chains.extend(rho_i);
    ChainSet::new(ModelKind::Regression, config.seed, stream, config.burn_in, chains)
}

fn sweep(
    rng: &mut SamplerRng,
    data: &[ZDatum],
    design: &DesignMatrix,
    priors: &RegressionPriors,
    zeta: &mut [f64],
    tau: &mut f64,
    beta: &mut DVector<f64>,
) -> Result<()> {
    for (i, (zi, d)) in zeta.iter_mut().zip(data).enumerate() {
        *zi = draw_normal(rng, &conditional_zeta_i_reg(beta, *tau, d, design, i));
    }
    let ig = conditional_tau_reg(zeta, beta, design, &priors.tau);
    *tau = draw_inverse_gamma(rng, ig.shape, ig.rate)?;
    *beta = conditional_beta(zeta, *tau, design, priors)?.sample(rng)?;
    Ok(())
}
