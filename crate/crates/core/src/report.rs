//! Rendering of a result document as JSON, CSV or a plain-text report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::ResultDocument;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// True unless the `NO_COLOR` environment variable is set to a non-empty value.
pub fn color_allowed() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty())
}

pub fn render(doc: &ResultDocument, format: Format, color: bool) -> String {
    match format {
        Format::Json => doc.to_json(),
        Format::Csv => to_csv(doc),
        Format::Text => to_text(doc, color),
    }
}

/// Parameter table, a blank line, then the DIC table.
pub fn to_csv(doc: &ResultDocument) -> String {
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["model", "parameter", "mean", "sd", "variance", "ci_low", "ci_high", "significant"])
            .expect("in-memory write");
        for p in &doc.parameters {
            let s = &p.summary;
            w.write_record([
                p.model.as_str().to_string(),
                s.name.clone(),
                s.mean.to_string(),
                s.sd.to_string(),
                (s.sd * s.sd).to_string(),
                s.ci_low.to_string(),
                s.ci_high.to_string(),
                s.significant.to_string(),
            ])
            .expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    out.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["model", "dic", "d_bar", "d_hat", "p_d"]).expect("in-memory write");
        for d in &doc.dic {
            w.write_record([
                d.model.as_str().to_string(),
                d.dic.to_string(),
                d.d_bar.to_string(),
                d.d_hat.to_string(),
                d.p_d.to_string(),
            ])
            .expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    String::from_utf8(out).expect("csv output is utf-8")
}

const BOLD: &str = "\x1b[1m";
const YELLOW: &str = "\x1b[33m";
const RESET: &str = "\x1b[0m";

pub fn to_text(doc: &ResultDocument, color: bool) -> String {
    let paint = |code: &str, s: &str| if color { format!("{code}{s}{RESET}") } else { s.to_string() };
    let mut out = String::new();
    let m = &doc.meta;
    let _ = writeln!(
        out,
        "{}",
        paint(BOLD, &format!("metaprior {}  seed {}  power scheme {}", m.version, m.seed, m.power_scheme))
    );
    let _ = writeln!(out, "{} studies, data sha256 {}", m.data.rows, &m.data.sha256[..12.min(m.data.sha256.len())]);
    for run in &m.models {
        if run.iterations == 0 {
            let _ = writeln!(out, "{}: closed form", run.model);
        } else {
            let _ = writeln!(
                out,
                "{}: {} iterations, burn-in {}, {} chain(s), seed {}",
                run.model, run.iterations, run.burn_in, run.chains, run.seed
            );
        }
    }
    let level = m.config.ci_level * 100.0;
    let _ = writeln!(out);
    let header = format!(
        "{:<11} {:<22} {:>9} {:>9} {:>9} {:>9} {:>9}  sig",
        "model", "parameter", "mean", "sd", "variance", "ci_low", "ci_high"
    );
    let _ = writeln!(out, "{}", paint(BOLD, &header));
    for p in &doc.parameters {
        let s = &p.summary;
        let _ = writeln!(
            out,
            "{:<11} {:<22} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3}  {}",
            p.model.as_str(),
            s.name,
            s.mean,
            s.sd,
            s.sd * s.sd,
            s.ci_low,
            s.ci_high,
            if s.significant { "*" } else { "" }
        );
    }
    let _ = writeln!(out, "({level}% equal-tail credible intervals; * marks an interval excluding 0)");
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{}",
        paint(BOLD, &format!("{:<11} {:>12} {:>12} {:>12} {:>10}", "model", "DIC", "D_bar", "D_hat", "p_D"))
    );
    for d in &doc.dic {
        let _ = writeln!(
            out,
            "{:<11} {:>12.3} {:>12.3} {:>12.3} {:>10.3}",
            d.model.as_str(),
            d.dic,
            d.d_bar,
            d.d_hat,
            d.p_d
        );
    }
    if let Some(c) = &doc.comparison {
        let _ = writeln!(
            out,
            "preferred under {}: {} (smallest DIC; compare only within one power scheme)",
            c.power_scheme, c.preferred
        );
    }
    let flagged: Vec<String> = doc
        .diagnostics
        .iter()
        .filter(|d| d.flagged)
        .map(|d| format!("{}/{} (chain {}, z = {:.2})", d.model, d.parameter, d.chain, d.z.unwrap_or(f64::NAN)))
        .collect();
    let unavailable = doc.diagnostics.iter().filter(|d| d.z.is_none()).count();
    let _ = writeln!(out);
    if flagged.is_empty() {
        let _ = writeln!(out, "Geweke: no parameter flagged");
    } else {
        let _ = writeln!(out, "{}", paint(YELLOW, &format!("Geweke: flagged {}", flagged.join(", "))));
    }
    if unavailable > 0 {
        let _ = writeln!(out, "Geweke: unavailable for {unavailable} parameter(s), chains too short");
    }
    out
}
