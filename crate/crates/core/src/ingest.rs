//! Data files: a header line of column names, then one study per line.
//!
//! Fields are separated by runs of spaces and tabs; lines end in `\n` with an
//! optional `\r`. Blank lines are skipped and `NA` marks a missing value. Files
//! whose name ends in `.csv` use the same rules with a comma delimiter.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Study;

pub const MISSING: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    #[default]
    Whitespace,
    Comma,
}

impl Delimiter {
    /// Comma for `.csv` files, whitespace otherwise.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Delimiter::Comma,
            _ => Delimiter::Whitespace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl DataTable {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Serializes in the canonical whitespace format. Values use the shortest
    /// representation that parses back to the same number.
    pub fn to_text(&self) -> String {
        let mut out = self.header.join(" ");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|v| v.map_or_else(|| MISSING.to_string(), |x| format!("{x:?}")))
                .collect();
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn read_table(path: &Path) -> Result<DataTable> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_with(&text, Delimiter::for_path(path))
}

/// Parses the canonical whitespace-delimited format.
pub fn parse_table(text: &str) -> Result<DataTable> {
    parse_with(text, Delimiter::Whitespace)
}

pub fn parse_with(text: &str, delimiter: Delimiter) -> Result<DataTable> {
    match delimiter {
        Delimiter::Whitespace => {
            let lines = text
                .split('\n')
                .map(|l| l.strip_suffix('\r').unwrap_or(l))
                .enumerate()
                .map(|(i, l)| (i + 1, l.split([' ', '\t']).filter(|t| !t.is_empty()).collect::<Vec<_>>()))
                .filter(|(_, tokens)| !tokens.is_empty());
            build_table(lines)
        }
        Delimiter::Comma => parse_csv(text),
    }
}

fn parse_csv(text: &str) -> Result<DataTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        records.push((line, rec));
    }
    build_table(records.iter().filter_map(|(line, rec)| {
        let tokens: Vec<&str> = rec.iter().collect();
        (!tokens.iter().all(|t| t.is_empty())).then_some((*line, tokens))
    }))
}

fn build_table<'a>(mut lines: impl Iterator<Item = (usize, Vec<&'a str>)>) -> Result<DataTable> {
    let Some((header_line, header)) = lines.next() else {
        return Err(Error::Parse {
            line: 1,
            message: "empty input: the first line must name the columns".into(),
        });
    };
    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(*name) {
            return Err(Error::Parse {
                line: header_line,
                message: format!("duplicate column name `{name}`"),
            });
        }
    }
    let header: Vec<String> = header.into_iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, tokens) in lines {
        if tokens.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), tokens.len()),
            });
        }
        let row = tokens
            .iter()
            .zip(&header)
            .map(|(tok, col)| parse_value(tok).ok_or_else(|| Error::Parse {
                line,
                message: format!("column `{col}`: `{tok}` is not a number or {MISSING}"),
            }))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(DataTable { header, rows })
}

fn parse_value(token: &str) -> Option<Option<f64>> {
    if token == MISSING {
        return Some(None);
    }
    // Rust's float grammar also accepts inf/nan spellings; only plain decimal
    // and scientific notation are data.
    let plain = token
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E'));
    if !plain {
        return None;
    }
    token.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some)
}

/// Which columns play which role.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ColumnBinding {
    pub cor: String,
    pub n: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<String>,
    /// One name binds the second measure's reliability; two bind both.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reliability: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub covariates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ColumnBinding {
    pub fn new(cor: impl Into<String>, n: impl Into<String>) -> Self {
        ColumnBinding {
            cor: cor.into(),
            n: n.into(),
            ..Default::default()
        }
    }
}

/// One study per row, in row order. Row numbers in errors are 1-based data
/// rows (the header is not counted).
pub fn bind_dataset(table: &DataTable, binding: &ColumnBinding) -> Result<Vec<Study>> {
    let cor = table.column_index(&binding.cor)?;
    let n = table.column_index(&binding.n)?;
    let power = binding.power.as_deref().map(|c| table.column_index(c)).transpose()?;
    let (rel_x, rel_y) = match binding.reliability.as_slice() {
        [] => (None, None),
        [y] => (None, Some(table.column_index(y)?)),
        [x, y] => (Some(table.column_index(x)?), Some(table.column_index(y)?)),
        more => {
            return Err(Error::Config(format!(
                "at most two reliability columns can be bound, got {}",
                more.len()
            )))
        }
    };
    let covariates = binding
        .covariates
        .iter()
        .map(|c| table.column_index(c))
        .collect::<Result<Vec<_>>>()?;
    let label = binding.label.as_deref().map(|c| table.column_index(c)).transpose()?;

    table
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let row_no = i + 1;
            let bad = |field: &str, message: String| Error::InvariantViolation {
                row: row_no,
                field: field.to_string(),
                message,
            };
            let r = row[cor].ok_or_else(|| bad(&binding.cor, "correlation is missing".into()))?;
            let n_value = row[n].ok_or_else(|| bad(&binding.n, "sample size is missing".into()))?;
            if n_value.fract() != 0.0 || n_value < 0.0 || n_value > u64::MAX as f64 {
                return Err(bad(&binding.n, format!("sample size {n_value} is not a whole number")));
            }
            let study = Study {
                label: match label {
                    Some(j) => row[j].map_or_else(|| row_no.to_string(), |v| format!("{v}")),
                    None => row_no.to_string(),
                },
                r,
                n: n_value as u64,
                rel_x: rel_x.and_then(|j| row[j]),
                rel_y: rel_y.and_then(|j| row[j]),
                covariates: covariates.iter().map(|&j| row[j]).collect(),
                power: power.and_then(|j| row[j]),
            };
            study.validate().map_err(|e| match e {
                Error::InvariantViolation { field, message, .. } => {
                    let column = match field.as_str() {
                        "r" => binding.cor.clone(),
                        "n" => binding.n.clone(),
                        "power" => binding.power.clone().unwrap_or(field),
                        "rel_x" if binding.reliability.len() == 2 => binding.reliability[0].clone(),
                        "rel_x" | "rel_y" => binding.reliability.last().cloned().unwrap_or(field),
                        _ => field,
                    };
                    bad(&column, message)
                }
                other => other,
            })?;
            Ok(study)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_table() {
        let t = parse_table("fi n\n0.5 28\n0 103\n").unwrap();
        assert_eq!(t.header, vec!["fi", "n"]);
        assert_eq!(t.rows, vec![vec![Some(0.5), Some(28.0)], vec![Some(0.0), Some(103.0)]]);
    }

    #[test]
    fn tokenization_rules() {
        let t = parse_table("\r\n  a\t\tb  \r\n\n1   2\r\n\t\nNA 3e-2").unwrap();
        assert_eq!(t.header, vec!["a", "b"]);
        assert_eq!(t.rows, vec![vec![Some(1.0), Some(2.0)], vec![None, Some(0.03)]]);
    }

    #[test]
    fn header_only_is_empty_table() {
        let t = parse_table("fi n\n").unwrap();
        assert!(t.rows.is_empty());
    }

    #[test]
    fn ragged_row_reports_line() {
        assert_eq!(
            parse_table("fi n\n0.5\n").unwrap_err(),
            Error::Parse { line: 2, message: "expected 2 fields, found 1".into() }
        );
    }

    #[test]
    fn bad_token_names_line_and_column() {
        let err = parse_table("fi n\n0.5 28\n\n0.1 many\n").unwrap_err();
        let Error::Parse { line, message } = err else { panic!() };
        assert_eq!(line, 4);
        assert!(message.contains("`n`") && message.contains("many"));
        for tok in ["na", "inf", "NaN", "0,5", "1_000"] {
            assert!(parse_table(&format!("a\n{tok}\n")).is_err(), "{tok}");
        }
    }

    #[test]
    fn duplicate_header() {
        assert!(matches!(parse_table("n n\n1 2\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(parse_table(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_table("\n \n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_variant() {
        let t = parse_with("fi, n\r\n0.5,28\n\n0,NA\n", Delimiter::Comma).unwrap();
        assert_eq!(t.header, vec!["fi", "n"]);
        assert_eq!(t.rows, vec![vec![Some(0.5), Some(28.0)], vec![Some(0.0), None]]);
        assert!(matches!(
            parse_with("a,b\n1\n", Delimiter::Comma),
            Err(Error::Parse { line: 2, .. })
        ));
        assert_eq!(Delimiter::for_path(Path::new("x/y.CSV")), Delimiter::Comma);
        assert_eq!(Delimiter::for_path(Path::new("y.txt")), Delimiter::Whitespace);
    }

    #[test]
    fn bind_basic() {
        let t = parse_table("fi n\n0.5 28\n0 103\n").unwrap();
        let s = bind_dataset(&t, &ColumnBinding::new("fi", "n")).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].r, s[0].n, s[0].label.as_str()), (0.5, 28, "1"));
        assert_eq!((s[1].r, s[1].n, s[1].label.as_str()), (0.0, 103, "2"));
    }

    #[test]
    fn bind_power_above_one() {
        let t = parse_table("fi n a\n0.5 28 1.5\n0 103 NA\n").unwrap();
        let b = ColumnBinding { power: Some("a".into()), ..ColumnBinding::new("fi", "n") };
        let s = bind_dataset(&t, &b).unwrap();
        assert_eq!(s[0].power, Some(1.5));
        assert_eq!(s[1].power, None);
    }

    #[test]
    fn bind_errors() {
        let t = parse_table("fi n\n0.5 28\n0.2 3\n").unwrap();
        assert_eq!(
            bind_dataset(&t, &ColumnBinding::new("r", "n")).unwrap_err(),
            Error::UnknownColumn("r".into())
        );
        let err = bind_dataset(&t, &ColumnBinding::new("fi", "n")).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { row: 2, ref field, .. } if field == "n"));
        let frac = parse_table("fi n\n0.5 28.5\n").unwrap();
        assert!(matches!(
            bind_dataset(&frac, &ColumnBinding::new("fi", "n")),
            Err(Error::InvariantViolation { row: 1, .. })
        ));
        let missing = parse_table("fi n\nNA 28\n").unwrap();
        assert!(matches!(
            bind_dataset(&missing, &ColumnBinding::new("fi", "n")),
            Err(Error::InvariantViolation { row: 1, .. })
        ));
        let bad_r = parse_table("fi n\n0.2 30\n1 30\n").unwrap();
        assert!(matches!(
            bind_dataset(&bad_r, &ColumnBinding::new("fi", "n")),
            Err(Error::InvariantViolation { row: 2, ref field, .. }) if field == "fi"
        ));
    }

    #[test]
    fn bind_reliability_covariates_label() {
        let t = parse_table("id fi n ryy rxx size\n7 0.3 50 0.81 NA 1\n8 0.2 60 NA 0.9 0\n").unwrap();
        let one = ColumnBinding { reliability: vec!["ryy".into()], ..ColumnBinding::new("fi", "n") };
        let s = bind_dataset(&t, &one).unwrap();
        assert_eq!((s[0].rel_x, s[0].rel_y), (None, Some(0.81)));
        let both = ColumnBinding {
            reliability: vec!["rxx".into(), "ryy".into()],
            covariates: vec!["size".into()],
            label: Some("id".into()),
            ..ColumnBinding::new("fi", "n")
        };
        let s = bind_dataset(&t, &both).unwrap();
        assert_eq!((s[1].rel_x, s[1].rel_y), (Some(0.9), None));
        assert_eq!(s[0].covariates, vec![Some(1.0)]);
        assert_eq!(s[1].label, "8");
    }
}
