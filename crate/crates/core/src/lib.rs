//! Bayesian meta-analysis of correlation coefficients with per-study power
//! priors: closed-form fixed effects, Gibbs-sampled random effects and
//! meta-regression, with DIC model comparison.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod corrections;
pub mod error;
pub mod fisher;
pub mod fixed;
pub mod ingest;
pub mod mcmc;
pub mod model;
pub mod power;
pub mod random;
pub mod regression;
pub mod report;
pub mod synth;

#[cfg(feature = "cli")]
pub mod cli;
#[cfg(feature = "service")]
pub mod service;

pub use analysis::{run_analysis, AnalysisConfig, ModelChoice, ResultDocument};
pub use error::{Error, Result};
pub use model::{ModelFit, ModelKind, NormalPosterior, Study, ZDatum};
pub use power::PowerScheme;
