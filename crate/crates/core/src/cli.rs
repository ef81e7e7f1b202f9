//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 infeasible split or
//! unsatisfied search, 3 verification failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assembly::{build_rule, CubatureRule};
use crate::decomposition::{default_split, MassSplit};
use crate::error::{CubatureError, Result};
use crate::io::{parse_real_list, read_rule_file, write_rule, Format};
use crate::moments::{Region, RegionKind, SymmetricMomentSpec};
use crate::reference::{reference_tables, regenerate_csv};
use crate::split_search::{search_masses, SearchMode, SearchObjective, DEFAULT_MAX_EVALS};
use crate::validation::{
    check_exactness, classify_nodes, degree4_nonexactness, exactness_tolerance, ExactnessReport,
    NodeClass, NodeClassification, DEFAULT_BOUNDARY_TOLERANCE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

/// Default tolerance for `verify`: published rules carry about 14 digits.
pub const DEFAULT_VERIFY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "symcubature",
    version,
    about = "Degree-3 cubature rules for permutation-symmetric integrals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a rule from a region or moment file and a mass split.
    Generate(GenerateArgs),
    /// Check a rule file for degree-3 exactness and node placement.
    Verify(VerifyArgs),
    /// Search for a mass split whose nodes lie inside the region.
    Search(SearchArgs),
    /// Regenerate the shipped reference tables and diff them.
    Tables(TablesArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegionArg {
    Simplex,
    #[value(alias = "ball-sector", alias = "ball_sector")]
    Sector,
    Cube,
}

impl From<RegionArg> for RegionKind {
    fn from(r: RegionArg) -> Self {
        match r {
            RegionArg::Simplex => RegionKind::Simplex,
            RegionArg::Sector => RegionKind::BallSector,
            RegionArg::Cube => RegionKind::Cube,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
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

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Feasible,
    Interior,
    Boundary,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Feasible => SearchMode::Feasible,
            ModeArg::Interior => SearchMode::Interior,
            ModeArg::Boundary => SearchMode::InteriorOrBoundary,
        }
    }
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// Built-in region.
    #[arg(long, group = "source")]
    region: Option<RegionArg>,
    /// JSON moment file with keys n, m1, mx, mxx, mxy, mxxx, mxxy, mxyz.
    #[arg(long, group = "source", value_name = "FILE")]
    spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    source: Source,
    /// Dimension (required with --region; checked against --spec).
    #[arg(long)]
    dim: Option<usize>,
    /// Mass multipliers t_k (mu_k = t_k L(1)/n), e.g. 93/85,378/391,108/115.
    #[arg(
        long,
        value_name = "LIST",
        conflicts_with = "mu",
        allow_hyphen_values = true
    )]
    t: Option<String>,
    /// Masses mu_k given directly.
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    mu: Option<String>,
    /// Add the extra node carrying L(1) - sum(mu).
    #[arg(long)]
    compensate: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Write the rule here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Absolute exactness tolerance [default: 1e-12 * max(1, L(1))].
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Rule file, JSON or CSV.
    rule: PathBuf,
    #[command(flatten)]
    source: Source,
    /// Dimension; defaults to the rule's.
    #[arg(long)]
    dim: Option<usize>,
    /// Absolute exactness tolerance.
    #[arg(long, default_value_t = DEFAULT_VERIFY_TOLERANCE)]
    tol: f64,
    /// Tolerance for classifying nodes as on the boundary.
    #[arg(long, default_value_t = DEFAULT_BOUNDARY_TOLERANCE)]
    boundary_tol: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_enum, default_value = "interior")]
    mode: ModeArg,
    /// Let the masses sum to anything in (0, 2 L(1)) and add the extra node.
    #[arg(long)]
    compensate: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_EVALS)]
    max_evals: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BOUNDARY_TOLERANCE)]
    boundary_tol: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TablesArgs {
    /// Directory for the regenerated CSV files.
    #[arg(long, env = "SYMCUBATURE_OUT_DIR", default_value = "tables")]
    out_dir: PathBuf,
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a, out, err),
        Command::Verify(a) => verify(a, out, err),
        Command::Search(a) => search(a, out, err),
        Command::Tables(a) => tables(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_infeasible() {
                EXIT_INFEASIBLE
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn load_source(
    source: &Source,
    dim: Option<usize>,
) -> Result<(SymmetricMomentSpec, Option<Region>)> {
    match (&source.region, &source.spec) {
        (Some(kind), None) => {
            let n = dim.ok_or_else(|| CubatureError::Parse("--region needs --dim".into()))?;
            let region = Region::new((*kind).into(), n)?;
            Ok((region.spec(), Some(region)))
        }
        (None, Some(path)) => {
            let spec = SymmetricMomentSpec::from_json_str(&std::fs::read_to_string(path)?)?;
            if let Some(n) = dim {
                if n != spec.n() {
                    return Err(CubatureError::DimensionMismatch {
                        expected: spec.n(),
                        got: n,
                    });
                }
            }
            Ok((spec, None))
        }
        _ => unreachable!("clap enforces exactly one source"),
    }
}

fn source_name(region: Option<&Region>) -> String {
    region.map_or_else(|| "custom".to_string(), |r| r.kind().name().to_string())
}

fn emit(text: &str, output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn generate(a: GenerateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (spec, region) = load_source(&a.source, a.dim)?;
    let split = match (&a.t, &a.mu) {
        (Some(t), _) => MassSplit::from_t(&spec, &parse_real_list(t)?, a.compensate)?,
        (None, Some(mu)) => MassSplit::new(&spec, parse_real_list(mu)?, a.compensate)?,
        (None, None) if a.compensate => {
            MassSplit::new(&spec, default_split(&spec).masses().to_vec(), true)?
        }
        (None, None) => default_split(&spec),
    };
    let mut rule = build_rule(&spec, &split)?;
    rule.metadata.source = source_name(region.as_ref());
    emit(
        &write_rule(&rule, a.format.into())?,
        a.output.as_deref(),
        out,
    )?;

    let report = check_exactness(&rule, &spec)?;
    let tol = a.tol.unwrap_or_else(|| exactness_tolerance(spec.m_1()));
    writeln!(
        err,
        "{} nodes, total weight {:.17e}, max degree<=3 error {:.3e} (tolerance {:.1e})",
        rule.len(),
        rule.total_weight(),
        report.max_abs_error,
        tol
    )?;
    Ok(if report.passes(tol) {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn verify(a: VerifyArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32> {
    let rule = read_rule_file(&a.rule)?;
    let (spec, region) = load_source(&a.source, Some(a.dim.unwrap_or(rule.dim)))?;
    let mut report = check_exactness(&rule, &spec)?;
    let classification = match &region {
        Some(r) => {
            report.degree4_witness = degree4_nonexactness(&rule, r)?;
            Some(classify_nodes(&rule, r, a.boundary_tol)?)
        }
        None => None,
    };
    let passed = report.passes(a.tol);
    let text = match a.format {
        FormatArg::Json => {
            let value = serde_json::json!({
                "passed": passed,
                "tolerance": a.tol,
                "nodes": rule.len(),
                "total_weight": rule.total_weight(),
                "exactness": report,
                "classification": classification,
            });
            serde_json::to_string_pretty(&value)? + "\n"
        }
        FormatArg::Text | FormatArg::Csv => {
            render_verification(&rule, &report, classification.as_ref(), a.tol, passed)
        }
    };
    out.write_all(text.as_bytes())?;
    Ok(if passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn render_verification(
    rule: &CubatureRule,
    report: &ExactnessReport,
    classification: Option<&NodeClassification>,
    tol: f64,
    passed: bool,
) -> String {
    let mut s = String::new();
    writeln!(s, "nodes:            {}", rule.len()).unwrap();
    writeln!(s, "total weight:     {:.17e}", rule.total_weight()).unwrap();
    writeln!(s, "monomials:        {}", report.monomials_checked).unwrap();
    writeln!(
        s,
        "max abs error:    {:.3e} at {:?}",
        report.max_abs_error, report.worst_monomial
    )
    .unwrap();
    writeln!(s, "max rel error:    {:.3e}", report.max_rel_error).unwrap();
    for (d, e) in report.per_degree_max.iter().enumerate() {
        writeln!(s, "  degree {d}:       {e:.3e}").unwrap();
    }
    match &report.degree4_witness {
        Some((alpha, e)) => writeln!(s, "degree 4 witness: {alpha:?} error {e:.3e}").unwrap(),
        None if classification.is_some() => writeln!(s, "degree 4 witness: none found").unwrap(),
        None => {}
    }
    if let Some(c) = classification {
        writeln!(
            s,
            "nodes inside:     {} interior, {} boundary, {} exterior (tol {:.0e})",
            c.interior, c.boundary, c.exterior, c.tolerance
        )
        .unwrap();
        let rows = |class| {
            c.indices_of(class)
                .iter()
                .map(|i| (i + 1).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        if c.exterior > 0 {
            writeln!(s, "exterior rows:    {}", rows(NodeClass::Exterior)).unwrap();
        }
        if c.boundary > 0 {
            writeln!(s, "boundary rows:    {}", rows(NodeClass::Boundary)).unwrap();
        }
        writeln!(s, "negative weights: {}", c.negative_weights).unwrap();
    }
    writeln!(
        s,
        "exactness:        {} (tolerance {tol:.1e})",
        if passed { "PASS" } else { "FAIL" }
    )
    .unwrap();
    s
}

fn search(a: SearchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (spec, region) = load_source(&a.source, a.dim)?;
    let mut objective = SearchObjective::new(a.mode.into(), a.compensate, a.max_evals, a.seed)?;
    objective.boundary_tol = a.boundary_tol;
    let mut outcome = search_masses(&spec, region.as_ref(), &objective)?;
    outcome.rule.metadata.source = source_name(region.as_ref());
    emit(
        &write_rule(&outcome.rule, a.format.into())?,
        a.output.as_deref(),
        out,
    )?;

    let r = &outcome.report;
    let t = outcome.split.t_parameters(&spec);
    writeln!(
        err,
        "{}: {} evaluations, best start {}, {} violating nodes, {} negative weights, min margin {:.3e}",
        if r.satisfied { "satisfied" } else { "not satisfied" },
        r.evaluations,
        r.best_start,
        r.score.violations,
        r.score.negative_weights,
        r.score.min_margin
    )?;
    writeln!(err, "t = {}", join(&t))?;
    writeln!(err, "mu = {}", join(outcome.split.masses()))?;
    Ok(if r.satisfied {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    })
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn tables(a: TablesArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32> {
    std::fs::create_dir_all(&a.out_dir)?;
    for table in reference_tables() {
        let (rule, text) = regenerate_csv(&table)?;
        let path = a
            .out_dir
            .join(format!("{}.{}", table.id, Format::Csv.extension()));
        std::fs::write(&path, text)?;
        let diff = table.diff(&rule)?;
        writeln!(
            out,
            "{:<31} {:>2} nodes  node dev {:.2e}  weight dev {:.2e}  {}",
            table.id,
            rule.len(),
            diff.max_node_distance,
            diff.max_weight_deviation,
            if diff.within_tolerance() {
                "match".to_string()
            } else {
                format!(
                    "{} rows differ from the published values",
                    diff.exceeding.len()
                )
            }
        )?;
    }
    writeln!(out, "wrote {}", a.out_dir.display())?;
    Ok(EXIT_OK)
}
