//! Command-line front end. Exit codes: 0 success, 1 data or model error,
//! 2 usage error.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{run_analysis, Analysis, AnalysisConfig, ModelChoice};
use crate::error::Error;
use crate::fixed::FixedMode;
use crate::ingest::Delimiter;
use crate::mcmc::write_trace_csv;
use crate::report::{color_allowed, render, Format};
use crate::synth::{synthetic_studies, to_table, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "metaprior", version, about = "Bayesian meta-analysis of correlations with power priors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one or more models to a data file.
    Fit(Box<FitArgs>),
    /// Write a seeded synthetic 56-study data file.
    Synth(SynthArgs),
    /// Run the HTTP service.
    #[cfg(feature = "service")]
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Fixed,
    Random,
    Regression,
    All,
}

impl From<ModelArg> for ModelChoice {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Fixed => ModelChoice::Fixed,
            ModelArg::Random => ModelChoice::Random,
            ModelArg::Regression => ModelChoice::Regression,
            ModelArg::All => ModelChoice::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    Text,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Text => Format::Text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixedModeArg {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("power").multiple(false).args(["power_col", "power_uniform", "power_rule", "power_reliability"])))]
pub struct FitArgs {
    /// Data file: header line, then one study per line (.csv files use commas).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "random")]
    pub model: ModelArg,
    /// Column holding the correlations.
    #[arg(long)]
    pub cor: String,
    /// Column holding the sample sizes.
    #[arg(long)]
    pub n: String,
    /// Column used to label studies (default: row number).
    #[arg(long)]
    pub label: Option<String>,
    /// Read each study's power from this column.
    #[arg(long)]
    pub power_col: Option<String>,
    /// Give every study the same power.
    #[arg(long)]
    pub power_uniform: Option<f64>,
    /// Threshold rule, e.g. `r>0.2:0.5;default:1` or `n>1000:0.1;default:1`.
    #[arg(long)]
    pub power_rule: Option<String>,
    /// Use the product of the two reliabilities as power.
    #[arg(long)]
    pub power_reliability: bool,
    /// Reliability columns: one name (second measure) or two (first,second).
    #[arg(long, value_delimiter = ',', num_args = 1..=2)]
    pub reliability_cols: Vec<String>,
    /// Divide each correlation by the square root of its reliabilities.
    #[arg(long)]
    pub correct_attenuation: bool,
    /// Covariate columns for meta-regression, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub prior_mean: Option<f64>,
    #[arg(long)]
    pub prior_var: Option<f64>,
    #[arg(long)]
    pub tau_shape: Option<f64>,
    #[arg(long)]
    pub tau_rate: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ci_level: Option<f64>,
    /// Independent chains per MCMC model.
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long, value_enum)]
    pub fixed_mode: Option<FixedModeArg>,
    /// Also report the per-study effects zeta[i] and rho[i].
    #[arg(long)]
    pub random_effects: bool,
    /// Write the MCMC draws (burn-in included) as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

impl FitArgs {
    pub fn config(&self) -> AnalysisConfig {
        let mut c = AnalysisConfig::new(&self.cor, &self.n);
        c.model = self.model.into();
        c.label = self.label.clone();
        c.power_col = self.power_col.clone();
        c.power_uniform = self.power_uniform;
        c.power_rule = self.power_rule.clone();
        c.power_reliability = self.power_reliability;
        c.reliability_cols = self.reliability_cols.clone();
        c.correct_attenuation = self.correct_attenuation;
        c.covariates = self.covariates.clone();
        c.random_effects = self.random_effects;
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(v) = self.$field { c.$field = v; })*};
        }
        set!(prior_mean, prior_var, tau_shape, tau_rate, iters, burnin, seed, ci_level, chains);
        if let Some(mode) = self.fixed_mode {
            c.fixed_mode = match mode {
                FixedModeArg::Analytic => FixedMode::Analytic,
                FixedModeArg::MonteCarlo => FixedMode::MonteCarlo,
            };
        }
        c
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[cfg(feature = "service")]
#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Address to listen on; loopback unless told otherwise.
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: std::net::SocketAddr,
    /// Concurrent MCMC jobs (default: number of CPUs).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Store finished jobs as JSON files in this directory.
    #[arg(long)]
    pub persist_dir: Option<PathBuf>,
    /// Directory holding the built web UI, served at `/`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    /// Directory that `data_ref` in requests resolves against.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Largest accepted request body in bytes.
    #[arg(long, default_value_t = crate::service::DEFAULT_MAX_BODY)]
    pub max_body_bytes: usize,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Fit(args) => fit(&args),
        Command::Synth(args) => synth(&args),
        #[cfg(feature = "service")]
        Command::Serve(args) => serve(args),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}: {e}", e.kind());
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn read_data(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn fit(args: &FitArgs) -> Result<(), Error> {
    let text = read_data(&args.data)?;
    let config = args.config();
    let analysis = run_analysis(&text, Delimiter::for_path(&args.data), &config)?;
    if let Some(path) = &args.trace {
        write_traces(path, &analysis)?;
    }
    let format = Format::from(args.format);
    let stdout = std::io::stdout();
    let color = color_allowed() && stdout.is_terminal();
    match &args.out {
        Some(path) => {
            write_file(path, render(&analysis.document, format, false).as_bytes())?;
            let mut out = stdout.lock();
            out.write_all(render(&analysis.document, Format::Text, color).as_bytes())?;
        }
        None => {
            let mut out = stdout.lock();
            out.write_all(render(&analysis.document, format, color && format == Format::Text).as_bytes())?;
        }
    }
    Ok(())
}

/// One CSV per model with draws. A single such model writes to `path`; with
/// several, the model name is inserted before the extension.
fn write_traces(path: &Path, analysis: &Analysis) -> Result<(), Error> {
    let sampled: Vec<_> = analysis.fits.iter().filter(|f| !f.chains.is_empty()).collect();
    for fit in &sampled {
        let target = if sampled.len() == 1 {
            path.to_path_buf()
        } else {
            let stem = path.file_stem().map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned());
            let name = match path.extension() {
                Some(ext) => format!("{stem}.{}.{}", fit.kind, ext.to_string_lossy()),
                None => format!("{stem}.{}", fit.kind),
            };
            path.with_file_name(name)
        };
        let file = std::fs::File::create(&target)
            .map_err(|e| Error::Io(format!("{}: {e}", target.display())))?;
        write_trace_csv(&fit.chains, std::io::BufWriter::new(file))?;
    }
    if sampled.is_empty() {
        log::warn!("no trace written: the closed-form fixed-effects fit has no draws");
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), Error> {
    let studies = synthetic_studies(&SynthSpec::default(), args.seed)?;
    let text = to_table(&studies).to_text();
    match &args.out {
        Some(path) => write_file(path, text.as_bytes()),
        None => Ok(std::io::stdout().lock().write_all(text.as_bytes())?),
    }
}

#[cfg(feature = "service")]
fn serve(args: ServeArgs) -> Result<(), Error> {
    use crate::service::{serve as serve_http, ServiceConfig};
    let config = ServiceConfig {
        workers: args.workers.unwrap_or_else(crate::service::default_workers),
        persist_dir: args.persist_dir,
        ui_dir: args.ui_dir,
        data_dir: args.data_dir,
        max_body_bytes: args.max_body_bytes,
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(serve_http(args.bind, config))
}
