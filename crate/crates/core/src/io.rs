//! Number parsing and rule serialization (JSON, CSV, aligned text).
//!
//! CSV layout: a header `x1,...,xn,weight[,note]`, one node per row. Lines
//! starting with `#` are comments; comments of the form `# key: value` are
//! collected as header fields.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::assembly::CubatureRule;
use crate::error::{CubatureError, Result};

/// Parses a real given as a decimal or as an exact ratio `p/q`.
pub fn parse_real(text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || CubatureError::Parse(format!("not a number: {text:?}"));
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num = f64::from_str(num.trim()).map_err(|_| bad())?;
            let den = f64::from_str(den.trim()).map_err(|_| bad())?;
            if den == 0.0 {
                return Err(CubatureError::Parse(format!(
                    "zero denominator in {text:?}"
                )));
            }
            num / den
        }
        None => f64::from_str(text).map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// Comma-separated list of [`parse_real`] values.
pub fn parse_real_list(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(parse_real).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = CubatureError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" | "txt" => Ok(Format::Text),
            _ => Err(CubatureError::Parse(format!("unknown format {s:?}"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

pub fn rule_to_json(rule: &CubatureRule) -> String {
    serde_json::to_string_pretty(rule).expect("rule serialization cannot fail")
}

pub fn rule_from_json(text: &str) -> Result<CubatureRule> {
    let rule: CubatureRule = serde_json::from_str(text)?;
    rule.check_shape()?;
    Ok(rule)
}

/// CSV text; `header` lines become `# key: value` comments and `notes`, when
/// given, fill a trailing `note` column.
pub fn rule_to_csv(
    rule: &CubatureRule,
    header: &[(String, String)],
    notes: Option<&[String]>,
) -> Result<String> {
    let mut out = String::new();
    for (key, value) in header {
        writeln!(out, "# {key}: {value}").unwrap();
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut names: Vec<String> = (1..=rule.dim).map(|i| format!("x{i}")).collect();
    names.push("weight".into());
    if notes.is_some() {
        names.push("note".into());
    }
    writer.write_record(&names)?;
    for (i, (x, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        row.push(w.to_string());
        if let Some(notes) = notes {
            row.push(notes.get(i).cloned().unwrap_or_default());
        }
        writer.write_record(&row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CubatureError::Io(e.into_error()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

/// A rule read from CSV together with its comment header and notes.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRule {
    pub rule: CubatureRule,
    pub header: Vec<(String, String)>,
    /// One entry per node; empty when the file has no note column.
    pub notes: Vec<String>,
}

impl CsvRule {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn rule_from_csv(text: &str) -> Result<CsvRule> {
    let header = text
        .lines()
        .filter_map(|line| line.trim_start().strip_prefix('#'))
        .filter_map(|c| c.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let columns = reader.headers()?.clone();
    let dim = columns.iter().take_while(|c| c.starts_with('x')).count();
    if dim == 0 || columns.get(dim) != Some("weight") {
        return Err(CubatureError::Parse(
            "CSV header must be x1,...,xn,weight[,note]".into(),
        ));
    }
    let has_note = columns.get(dim + 1) == Some("note");
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut notes = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<f64> {
            let cell = record.get(i).ok_or_else(|| {
                CubatureError::Parse(format!("row {}: missing column {}", line + 1, i + 1))
            })?;
            parse_real(cell)
        };
        nodes.push((0..dim).map(field).collect::<Result<Vec<_>>>()?);
        weights.push(field(dim)?);
        if has_note {
            notes.push(record.get(dim + 1).unwrap_or("").to_string());
        }
    }
    let rule = CubatureRule::new(dim, nodes, weights)?;
    Ok(CsvRule {
        rule,
        header,
        notes,
    })
}

/// Fixed-width table with 14 decimals, one node per line.
pub fn rule_to_text(rule: &CubatureRule) -> String {
    let mut out = String::new();
    for i in 1..=rule.dim {
        write!(out, "{:>20}", format!("x{i}")).unwrap();
    }
    writeln!(out, "{:>20}", "weight").unwrap();
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        for v in x {
            write!(out, "{v:>20.14}").unwrap();
        }
        writeln!(out, "{w:>20.14}").unwrap();
    }
    out
}

pub fn write_rule(rule: &CubatureRule, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(rule_to_json(rule) + "\n"),
        Format::Csv => rule_to_csv(rule, &[], None),
        Format::Text => Ok(rule_to_text(rule)),
    }
}

/// Parses JSON or CSV, chosen by content: JSON files start with `{`.
pub fn parse_rule(text: &str) -> Result<CubatureRule> {
    if text.trim_start().starts_with('{') {
        rule_from_json(text)
    } else {
        Ok(rule_from_csv(text)?.rule)
    }
}

pub fn read_rule_file(path: &Path) -> Result<CubatureRule> {
    parse_rule(&std::fs::read_to_string(path)?)
}
