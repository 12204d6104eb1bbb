use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report. Display strings are prefixed with the
/// module that raised them so the CLI, the service and the C API all surface the
/// same diagnostic text.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("fisher: {0}")]
    Domain(String),

    #[error("corrections: study {label}: corrected correlation {corrected} has magnitude >= 1")]
    Overcorrection { label: String, corrected: f64 },

    #[error("power: study {label}: no power value and the scheme reads powers from a column")]
    MissingPower { label: String },

    #[error("power: {0}")]
    PowerRule(String),

    #[error("gibbs_regression: study {label}: missing value for covariate `{covariate}`")]
    MissingCovariate { label: String, covariate: String },

    #[error("gibbs_regression: singular design matrix: {0}")]
    SingularDesign(String),

    #[error("{module}: numerical failure: {message}")]
    Numerical {
        module: &'static str,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("io_ingest: line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io_ingest: unknown column `{0}`")]
    UnknownColumn(String),

    #[error("io_ingest: row {row}, field `{field}`: {message}")]
    InvariantViolation {
        row: usize,
        field: String,
        message: String,
    },

    #[error("mcmc_engine: quadrature oracle: {0}")]
    Oracle(String),

    #[error("mcmc_engine: diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Name of the module the error belongs to.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Domain(_) => "fisher",
            Error::Overcorrection { .. } => "corrections",
            Error::MissingPower { .. } | Error::PowerRule(_) => "power",
            Error::MissingCovariate { .. } | Error::SingularDesign(_) => "gibbs_regression",
            Error::Numerical { module, .. } => module,
            Error::Config(_) => "config",
            Error::Parse { .. } | Error::UnknownColumn(_) | Error::InvariantViolation { .. } => {
                "io_ingest"
            }
            Error::Oracle(_) | Error::DiagnosticUnavailable(_) => "mcmc_engine",
            Error::Io(_) => "io",
        }
    }

    /// Stable machine-readable kind, used in service payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::Overcorrection { .. } => "OvercorrectionError",
            Error::MissingPower { .. } => "MissingPower",
            Error::PowerRule(_) => "PowerRuleError",
            Error::MissingCovariate { .. } => "MissingCovariate",
            Error::SingularDesign(_) => "SingularDesignError",
            Error::Numerical { .. } => "NumericalError",
            Error::Config(_) => "ConfigError",
            Error::Parse { .. } => "ParseError",
            Error::UnknownColumn(_) => "UnknownColumn",
            Error::InvariantViolation { .. } => "InvariantViolation",
            Error::Oracle(_) => "OracleError",
            Error::DiagnosticUnavailable(_) => "DiagnosticUnavailable",
            Error::Io(_) => "IoError",
        }
    }

    /// True for row-addressed data invariant violations.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::InvariantViolation { .. }
                | Error::Overcorrection { .. }
                | Error::MissingPower { .. }
                | Error::MissingCovariate { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
