//! C interface to the metaprior engine.
//!
//! Every fallible function returns an [`MpStatus`]; on failure the message is
//! available from [`mp_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Strings returned
//! as `char *` are owned by the caller and released with [`mp_string_free`].
//! Panics never cross the boundary; they surface as `MP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use metaprior::analysis::{run_analysis, Analysis, AnalysisConfig};
use metaprior::fisher;
use metaprior::fixed::combine_studies;
use metaprior::ingest::{parse_with, DataTable, Delimiter};
use metaprior::{Error, ModelKind, NormalPosterior, ZDatum};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    OutOfRange = 3,
    Domain = 4,
    Config = 5,
    Parse = 6,
    UnknownColumn = 7,
    InvariantViolation = 8,
    PowerRule = 9,
    SingularDesign = 10,
    Numerical = 11,
    Io = 12,
    Panic = 13,
}

impl From<&Error> for MpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => MpStatus::Domain,
            Error::Config(_) => MpStatus::Config,
            Error::Parse { .. } => MpStatus::Parse,
            Error::UnknownColumn(_) => MpStatus::UnknownColumn,
            Error::InvariantViolation { .. }
            | Error::Overcorrection { .. }
            | Error::MissingPower { .. }
            | Error::MissingCovariate { .. } => MpStatus::InvariantViolation,
            Error::PowerRule(_) => MpStatus::PowerRule,
            Error::SingularDesign(_) => MpStatus::SingularDesign,
            Error::Numerical { .. } | Error::Oracle(_) | Error::DiagnosticUnavailable(_) => {
                MpStatus::Numerical
            }
            Error::Io(_) => MpStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpDelimiter {
    Whitespace = 0,
    Comma = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpModel {
    Fixed = 0,
    Random = 1,
    Regression = 2,
}

impl From<ModelKind> for MpModel {
    fn from(k: ModelKind) -> Self {
        match k {
            ModelKind::Fixed => MpModel::Fixed,
            ModelKind::Random => MpModel::Random,
            ModelKind::Regression => MpModel::Regression,
        }
    }
}

impl From<MpModel> for ModelKind {
    fn from(k: MpModel) -> Self {
        match k {
            MpModel::Fixed => ModelKind::Fixed,
            MpModel::Random => ModelKind::Random,
            MpModel::Regression => ModelKind::Regression,
        }
    }
}

/// One row of the result's parameter table. The name is fetched separately
/// with `mp_analysis_parameter_name`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpParameter {
    pub model: MpModel,
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub significant: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpDic {
    pub dic: f64,
    pub d_bar: f64,
    pub d_hat: f64,
    pub p_d: f64,
}

/// A parsed data file.
pub struct MpDataset {
    text: String,
    delimiter: Delimiter,
    table: DataTable,
}

/// A completed analysis.
pub struct MpAnalysis {
    analysis: Analysis,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(MpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(MpStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MpStatus::NullPointer, format!("ffi: `{what}` is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MpStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("ffi: internal panic: {message}"));
            MpStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MpStatus::InvalidUtf8, format!("ffi: `{what}` is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Fisher z of a correlation strictly inside (-1, 1).
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn mp_fisher_z(r: f64, out: *mut f64) -> MpStatus {
    guard(|| {
        *out_arg(out, "out")? = fisher::fisher_z(r)?;
        Ok(())
    })
}

/// Back-transform of a Fisher z value; the result lies strictly inside (-1, 1).
#[no_mangle]
pub extern "C" fn mp_inv_fisher_z(z: f64) -> f64 {
    fisher::inv_fisher_z(z)
}

/// Sampling variance `1 / (n - 3)` of z for sample size `n >= 4`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn mp_z_variance(n: u64, out: *mut f64) -> MpStatus {
    guard(|| {
        *out_arg(out, "out")? = fisher::z_variance(n)?;
        Ok(())
    })
}

/// Closed-form fixed-effects posterior of `m` studies under the prior
/// N(`prior_mean`, `prior_var`).
///
/// # Safety
/// `z`, `phi` and `alpha` must each point to `m` doubles (they may be null when
/// `m` is 0); `out_mean` and `out_var` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mp_combine_studies(
    prior_mean: f64,
    prior_var: f64,
    z: *const f64,
    phi: *const f64,
    alpha: *const f64,
    m: usize,
    out_mean: *mut f64,
    out_var: *mut f64,
) -> MpStatus {
    guard(|| {
        let prior = NormalPosterior::new(prior_mean, prior_var)?;
        let data = if m == 0 {
            Vec::new()
        } else {
            if z.is_null() || phi.is_null() || alpha.is_null() {
                return Err(null("z, phi or alpha"));
            }
            let (z, phi, alpha) = (
                std::slice::from_raw_parts(z, m),
                std::slice::from_raw_parts(phi, m),
                std::slice::from_raw_parts(alpha, m),
            );
            (0..m)
                .map(|i| ZDatum::new(z[i], phi[i], alpha[i]))
                .collect::<Result<Vec<_>, _>>()?
        };
        let out_mean = out_arg(out_mean, "out_mean")?;
        let out_var = out_arg(out_var, "out_var")?;
        let post = combine_studies(&prior, &data);
        *out_mean = post.mean;
        *out_var = post.variance;
        Ok(())
    })
}

/// Parses a data file held in memory.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mp_dataset_parse(
    text: *const c_char,
    delimiter: MpDelimiter,
    out: *mut *mut MpDataset,
) -> MpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?.to_string();
        let delimiter = match delimiter {
            MpDelimiter::Whitespace => Delimiter::Whitespace,
            MpDelimiter::Comma => Delimiter::Comma,
        };
        let table = parse_with(&text, delimiter)?;
        *out = Box::into_raw(Box::new(MpDataset { text, delimiter, table }));
        Ok(())
    })
}

/// Number of data rows, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle from `mp_dataset_parse`.
#[no_mangle]
pub unsafe extern "C" fn mp_dataset_rows(dataset: *const MpDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.table.rows.len())
}

/// Number of columns, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle from `mp_dataset_parse`.
#[no_mangle]
pub unsafe extern "C" fn mp_dataset_columns(dataset: *const MpDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.table.header.len())
}

/// # Safety
/// `dataset` must be null or a handle from `mp_dataset_parse` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mp_dataset_free(dataset: *mut MpDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Runs the analysis described by `config_json` (the same object the service
/// accepts under `config`, with fields named after the command-line flags).
///
/// # Safety
/// `dataset` must be a live handle, `config_json` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_run(
    dataset: *const MpDataset,
    config_json: *const c_char,
    out: *mut *mut MpAnalysis,
) -> MpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let dataset = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let config = AnalysisConfig::from_json(str_arg(config_json, "config_json")?)?;
        let analysis = run_analysis(&dataset.text, dataset.delimiter, &config)?;
        let names = analysis
            .document
            .parameters
            .iter()
            .map(|p| CString::new(p.summary.name.as_str()).unwrap_or_default())
            .collect();
        *out = Box::into_raw(Box::new(MpAnalysis { analysis, names }));
        Ok(())
    })
}

/// Rows in the result's parameter table, or 0 for a null handle.
///
/// # Safety
/// `analysis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_parameter_count(analysis: *const MpAnalysis) -> usize {
    analysis.as_ref().map_or(0, |a| a.names.len())
}

/// # Safety
/// `analysis` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_parameter(
    analysis: *const MpAnalysis,
    index: usize,
    out: *mut MpParameter,
) -> MpStatus {
    guard(|| {
        let a = analysis.as_ref().ok_or_else(|| null("analysis"))?;
        let out = out_arg(out, "out")?;
        let row = a.analysis.document.parameters.get(index).ok_or_else(|| {
            Failure(MpStatus::OutOfRange, format!("ffi: parameter index {index} out of range"))
        })?;
        let s = &row.summary;
        *out = MpParameter {
            model: row.model.into(),
            mean: s.mean,
            sd: s.sd,
            ci_low: s.ci_low,
            ci_high: s.ci_high,
            significant: s.significant,
        };
        Ok(())
    })
}

/// Name of parameter `index`, owned by the handle; null when out of range.
///
/// # Safety
/// `analysis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_parameter_name(
    analysis: *const MpAnalysis,
    index: usize,
) -> *const c_char {
    analysis
        .as_ref()
        .and_then(|a| a.names.get(index))
        .map_or(ptr::null(), |n| n.as_ptr())
}

/// DIC of one fitted model.
///
/// # Safety
/// `analysis` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_dic(
    analysis: *const MpAnalysis,
    model: MpModel,
    out: *mut MpDic,
) -> MpStatus {
    guard(|| {
        let a = analysis.as_ref().ok_or_else(|| null("analysis"))?;
        let out = out_arg(out, "out")?;
        let kind = ModelKind::from(model);
        let d = a.analysis.fit(kind).map(|f| f.dic).ok_or_else(|| {
            Failure(MpStatus::OutOfRange, format!("ffi: model {kind} was not fitted"))
        })?;
        *out = MpDic { dic: d.dic, d_bar: d.d_bar, d_hat: d.d_hat, p_d: d.p_d };
        Ok(())
    })
}

/// The result document as JSON; release with `mp_string_free`. Null for a
/// null handle.
///
/// # Safety
/// `analysis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_to_json(analysis: *const MpAnalysis) -> *mut c_char {
    match analysis.as_ref() {
        Some(a) => CString::new(a.analysis.document.to_json()).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `analysis` must be null or a handle from `mp_analysis_run` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mp_analysis_free(analysis: *mut MpAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// One-shot analysis: data text and configuration in, result document out.
///
/// # Safety
/// `text` and `config_json` must be NUL-terminated strings and `out_json` a
/// valid pointer. The string stored in `*out_json` is released with
/// `mp_string_free`.
#[no_mangle]
pub unsafe extern "C" fn mp_analyze_json(
    text: *const c_char,
    delimiter: MpDelimiter,
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> MpStatus {
    let Some(out) = out_json.as_mut() else {
        set_last_error("ffi: `out_json` is null");
        return MpStatus::NullPointer;
    };
    *out = ptr::null_mut();
    let mut dataset = ptr::null_mut();
    let status = mp_dataset_parse(text, delimiter, &mut dataset);
    if status != MpStatus::Ok {
        return status;
    }
    let mut analysis = ptr::null_mut();
    let status = mp_analysis_run(dataset, config_json, &mut analysis);
    mp_dataset_free(dataset);
    if status == MpStatus::Ok {
        *out = mp_analysis_to_json(analysis);
        mp_analysis_free(analysis);
    }
    status
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
