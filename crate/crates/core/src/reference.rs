//! Published rules shipped as CSV data, and their regeneration.
//!
//! Numeric columns hold the published values verbatim, with two exceptions
//! kept visible in the `note` column: the extra node's weight is stored as
//! the residual mass (`printed weight=...` keeps the published figure), and
//! entries the construction does not reproduce carry
//! `erratum <column>=<constructed value>`.

use crate::assembly::{build_rule, CubatureRule};
use crate::decomposition::MassSplit;
use crate::error::{CubatureError, Result};
use crate::io::{parse_real, parse_real_list, rule_from_csv, rule_to_csv};
use crate::moments::{Region, RegionKind};
use crate::validation::{compare_to_reference, RuleDiff};

const EMBEDDED: [(&str, &str); 9] = [
    (
        "simplex3-uniform",
        include_str!("../data/reference/simplex3-uniform.csv"),
    ),
    (
        "simplex3-boundary",
        include_str!("../data/reference/simplex3-boundary.csv"),
    ),
    (
        "simplex3-interior",
        include_str!("../data/reference/simplex3-interior.csv"),
    ),
    (
        "simplex4-uniform",
        include_str!("../data/reference/simplex4-uniform.csv"),
    ),
    (
        "simplex4-compensated",
        include_str!("../data/reference/simplex4-compensated.csv"),
    ),
    (
        "simplex4-compensated-interior",
        include_str!("../data/reference/simplex4-compensated-interior.csv"),
    ),
    (
        "sector3-uniform",
        include_str!("../data/reference/sector3-uniform.csv"),
    ),
    (
        "sector4-uniform",
        include_str!("../data/reference/sector4-uniform.csv"),
    ),
    (
        "sector4-interior",
        include_str!("../data/reference/sector4-interior.csv"),
    ),
];

pub fn table_ids() -> impl Iterator<Item = &'static str> {
    EMBEDDED.iter().map(|(id, _)| *id)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceTable {
    pub id: String,
    pub region: Region,
    /// Mass multipliers `t_k`, `mu_k = t_k L(1) / n`.
    pub t: Vec<f64>,
    pub t_text: String,
    pub compensation: bool,
    /// Per-entry tolerance for comparisons against this table.
    pub tolerance: f64,
    /// The rule as stored (published values, residual extra weight).
    pub rule: CubatureRule,
    pub notes: Vec<String>,
}

/// One `key=value` correction from a note.
#[derive(Clone, Debug, PartialEq)]
pub struct Correction {
    pub row: usize,
    pub column: String,
    pub value: f64,
}

impl ReferenceTable {
    /// Parses a reference CSV with `table`, `region`, `dim`, `t`,
    /// `compensation` and `tolerance` header fields.
    pub fn parse(text: &str) -> Result<Self> {
        let csv = rule_from_csv(text)?;
        let field = |key: &str| {
            csv.header_value(key)
                .ok_or_else(|| CubatureError::Parse(format!("reference header lacks {key:?}")))
        };
        let kind: RegionKind = field("region")?.parse()?;
        let dim: usize = field("dim")?
            .parse()
            .map_err(|_| CubatureError::Parse("bad dim".into()))?;
        if dim != csv.rule.dim {
            return Err(CubatureError::DimensionMismatch {
                expected: dim,
                got: csv.rule.dim,
            });
        }
        let compensation = match field("compensation")? {
            "true" => true,
            "false" => false,
            other => return Err(CubatureError::Parse(format!("bad compensation {other:?}"))),
        };
        let id = field("table")?.to_string();
        let t_text = field("t")?.to_string();
        let tolerance = parse_real(field("tolerance")?)?;
        let mut rule = csv.rule;
        rule.metadata.source = id.clone();
        rule.metadata.compensation = compensation;
        Ok(Self {
            t: parse_real_list(&t_text)?,
            t_text,
            tolerance,
            region: Region::new(kind, dim)?,
            id,
            compensation,
            notes: csv.notes,
            rule,
        })
    }

    pub fn split(&self) -> Result<MassSplit> {
        MassSplit::from_t(&self.region.spec(), &self.t, self.compensation)
    }

    /// The rule our construction produces for this table's parameters.
    pub fn construct(&self) -> Result<CubatureRule> {
        let mut rule = build_rule(&self.region.spec(), &self.split()?)?;
        rule.metadata.source = self.region.kind().name().to_string();
        Ok(rule)
    }

    /// `erratum` corrections listed in the notes.
    pub fn errata(&self) -> Vec<Correction> {
        self.notes_with_prefix("erratum")
    }

    /// Published values that differ from the stored numeric column
    /// (`printed ...` notes).
    pub fn printed_values(&self) -> Vec<Correction> {
        self.notes_with_prefix("printed")
    }

    fn notes_with_prefix(&self, prefix: &str) -> Vec<Correction> {
        let mut out = Vec::new();
        for (row, note) in self.notes.iter().enumerate() {
            let Some(rest) = note.trim().strip_prefix(prefix) else {
                continue;
            };
            for pair in rest.split_whitespace() {
                if let Some((column, value)) = pair.split_once('=') {
                    if let Ok(value) = parse_real(value) {
                        out.push(Correction {
                            row,
                            column: column.to_string(),
                            value,
                        });
                    }
                }
            }
        }
        out
    }

    /// The stored rule with every erratum applied.
    pub fn corrected_rule(&self) -> CubatureRule {
        let mut rule = self.rule.clone();
        for c in self.errata() {
            if c.column == "weight" {
                rule.weights[c.row] = c.value;
            } else if let Some(i) = c
                .column
                .strip_prefix('x')
                .and_then(|i| i.parse::<usize>().ok())
            {
                rule.nodes[c.row][i - 1] = c.value;
            }
        }
        rule
    }

    /// Order-insensitive diff of `rule` against the stored table.
    pub fn diff(&self, rule: &CubatureRule) -> Result<RuleDiff> {
        compare_to_reference(rule, &self.rule, self.tolerance, self.tolerance)
    }
}

pub fn reference_table(id: &str) -> Result<ReferenceTable> {
    let (_, text) = EMBEDDED
        .iter()
        .find(|(name, _)| *name == id)
        .ok_or_else(|| CubatureError::Parse(format!("unknown reference table {id:?}")))?;
    ReferenceTable::parse(text)
}

pub fn reference_tables() -> Vec<ReferenceTable> {
    EMBEDDED
        .iter()
        .map(|(_, text)| ReferenceTable::parse(text).expect("embedded tables parse"))
        .collect()
}

/// Constructs the table's rule, orders its rows like the stored table and
/// renders it as CSV. Entries where the stored value differs by more than the
/// table tolerance get a `printed <column>=<stored value>` note, and the
/// stored `printed` notes are carried over.
pub fn regenerate_csv(table: &ReferenceTable) -> Result<(CubatureRule, String)> {
    let built = table.construct()?;
    let diff = table.diff(&built)?;
    let mut order = vec![0; built.len()];
    for (i, &j) in diff.assignment.iter().enumerate() {
        order[j] = i;
    }
    let mut rule = built.clone();
    rule.nodes = order.iter().map(|&i| built.nodes[i].clone()).collect();
    rule.weights = order.iter().map(|&i| built.weights[i]).collect();

    let tol = table.tolerance;
    let notes: Vec<String> = (0..rule.len())
        .map(|row| {
            let mut parts = Vec::new();
            for (col, (&a, &b)) in rule.nodes[row]
                .iter()
                .zip(&table.rule.nodes[row])
                .enumerate()
            {
                if (a - b).abs() > tol {
                    parts.push(format!("x{}={b}", col + 1));
                }
            }
            if (rule.weights[row] - table.rule.weights[row]).abs() > tol {
                parts.push(format!("weight={}", table.rule.weights[row]));
            }
            for p in table.printed_values().iter().filter(|p| p.row == row) {
                parts.push(format!("{}={}", p.column, p.value));
            }
            if parts.is_empty() {
                String::new()
            } else {
                format!("printed {}", parts.join(" "))
            }
        })
        .collect();
    let header = vec![
        ("table".to_string(), table.id.clone()),
        ("region".to_string(), table.region.kind().name().to_string()),
        ("dim".to_string(), table.region.n().to_string()),
        ("t".to_string(), table.t_text.clone()),
        ("compensation".to_string(), table.compensation.to_string()),
        ("tolerance".to_string(), format!("{:e}", table.tolerance)),
    ];
    let text = rule_to_csv(&rule, &header, Some(&notes))?;
    Ok((rule, text))
}
