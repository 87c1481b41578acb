//! Command-line front end: `fit`, `pmf`, `sample`, `compare` and `dataset`.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O or data, 4 fit did not converge
//! (the result is still printed), 5 domain error.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{
    binbe_log_pmf, gen_waring_log_pmf, gnbbe_log_pmf, nbbe_log_pmf, total_mass, waring_log_pmf, yule_log_pmf,
    GnbBeParams, DEFAULT_TAIL_TOL, DEFAULT_X_CAP,
};
use crate::inference::{
    compare_models, fit, nb_log_pmf, poisson_log_pmf, FitOptions, FitResult, FrequencyTable, ModelKind,
};
use crate::sampling::{sample_gnbbe, RandomSource};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;
pub const EXIT_DOMAIN: i32 = 5;

/// Automobile claim counts 0..=7 (9461 policies).
pub const DENUIT_1958: [u64; 8] = [7840, 1317, 239, 42, 14, 4, 4, 1];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::InvalidData(_) | crate::Error::Io(_) => CliError::Data(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "gnbbe", version, about = "Fit and evaluate GNB-BE claim-count models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model by maximum likelihood.
    Fit(FitArgs),
    /// Tabulate pmf and cdf for x = 0..=max-count.
    Pmf(PmfArgs),
    /// Draw random counts, one per line.
    Sample(SampleArgs),
    /// Fit PD, NB, NB-BE and GNB-BE side by side.
    Compare(CompareArgs),
    /// Print a data set.
    Dataset(DatasetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Emit JSON (full precision).
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV (full precision).
    #[arg(long)]
    pub csv: bool,
}

impl OutputArgs {
    pub fn format(&self) -> OutputFormat {
        if self.json {
            OutputFormat::Json
        } else if self.csv {
            OutputFormat::Csv
        } else {
            OutputFormat::Table
        }
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Number of optimizer starts.
    #[arg(long, env = "GNBBE_STARTS", value_parser = clap::value_parser!(u32).range(1..))]
    pub starts: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Nelder–Mead iteration cap per start.
    #[arg(long, default_value_t = FitOptions::default().max_iters as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: u64,
    /// Tail tolerance for the total-mass sum.
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
}

impl SearchArgs {
    fn options(&self) -> FitOptions {
        let defaults = FitOptions::default();
        FitOptions {
            n_starts: self.starts.map_or(defaults.n_starts, |s| s as usize),
            seed: self.seed,
            max_iters: self.max_iters as usize,
            tail_tol: self.tail_tol,
            ..defaults
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_parser = parse_model_kind)]
    pub model: ModelKind,
    /// CSV file of `count,frequency` rows, or a built-in data set name.
    #[arg(long)]
    pub data: String,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, required_unless_present = "from_fit")]
    pub model: Option<PmfModel>,
    /// Comma-separated `name=value` pairs.
    #[arg(long, value_delimiter = ',', value_parser = parse_param, required_unless_present = "from_fit")]
    pub params: Vec<(String, f64)>,
    /// Take model and parameters from a `fit --json` output file.
    #[arg(long, conflicts_with = "params")]
    pub from_fit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PmfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub max_count: u64,
    /// Tail tolerance for the total-mass line.
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of draws.
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: String,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long, default_value = "denuit1958")]
    pub data: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_model_kind(s: &str) -> Result<ModelKind, String> {
    s.parse::<ModelKind>()
        .map_err(|_| format!("unknown model {s:?}; expected one of poisson, nb, nbbe, gnbbe"))
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("malformed number {value:?} for parameter {name:?}"))?;
    Ok((name.trim().to_ascii_lowercase(), value))
}

/// Every law the `pmf` and `sample` commands understand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmfModel {
    Poisson,
    Nb,
    NbBe,
    GnbBe,
    Yule,
    Waring,
    GenWaring,
    BinBe,
}

impl PmfModel {
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            PmfModel::Poisson => ModelKind::Poisson.param_names(),
            PmfModel::Nb => ModelKind::NegativeBinomial.param_names(),
            PmfModel::NbBe | PmfModel::BinBe => ModelKind::NbBe.param_names(),
            PmfModel::GnbBe => ModelKind::GnbBe.param_names(),
            PmfModel::Yule => &["b"],
            PmfModel::Waring => &["m", "k"],
            PmfModel::GenWaring => &["m", "a", "b"],
        }
    }

    fn from_kind(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Poisson => PmfModel::Poisson,
            ModelKind::NegativeBinomial => PmfModel::Nb,
            ModelKind::NbBe => PmfModel::NbBe,
            ModelKind::GnbBe => PmfModel::GnbBe,
        }
    }

    fn binomial_size(m: f64) -> crate::Result<u64> {
        if !(m >= 1.0 && m.fract() == 0.0 && m <= u32::MAX as f64) {
            return Err(crate::Error::Domain(format!(
                "binomial size m must be a positive integer, got {m}"
            )));
        }
        Ok(m as u64)
    }

    /// Parameters in [`Self::param_names`] order.
    pub fn log_pmf(self, p: &[f64], x: u64) -> crate::Result<f64> {
        match self {
            PmfModel::Poisson => poisson_log_pmf(p[0], x),
            PmfModel::Nb => nb_log_pmf(p[0], p[1], x),
            PmfModel::NbBe => nbbe_log_pmf(p[0], p[1], p[2], p[3], x),
            PmfModel::GnbBe => Ok(gnbbe_log_pmf(&GnbBeParams::new(p[0], p[4], p[1], p[2], p[3])?, x)?.log_prob),
            PmfModel::Yule => yule_log_pmf(p[0], x),
            PmfModel::Waring => waring_log_pmf(p[0], p[1], x),
            PmfModel::GenWaring => gen_waring_log_pmf(p[0], p[1], p[2], x),
            PmfModel::BinBe => binbe_log_pmf(Self::binomial_size(p[0])?, p[1], p[2], p[3], x),
        }
    }

    /// The law as a GNB-BE member, when it is one.
    pub fn as_gnbbe(self, p: &[f64]) -> crate::Result<Option<GnbBeParams>> {
        let params = match self {
            PmfModel::Poisson | PmfModel::Nb => return Ok(None),
            PmfModel::NbBe => GnbBeParams::new(p[0], 1.0, p[1], p[2], p[3])?,
            PmfModel::GnbBe => GnbBeParams::new(p[0], p[4], p[1], p[2], p[3])?,
            PmfModel::Yule => {
                yule_log_pmf(p[0], 0)?;
                GnbBeParams::new(1.0, 1.0, 1.0, p[0], 1.0)?
            }
            PmfModel::Waring => {
                waring_log_pmf(p[0], p[1], 0)?;
                GnbBeParams::new(p[0], 1.0, 1.0, p[1] - p[0], 1.0)?
            }
            PmfModel::GenWaring => GnbBeParams::new(p[0], 1.0, p[1], p[2], 1.0)?,
            PmfModel::BinBe => GnbBeParams::new(Self::binomial_size(p[0])? as f64, 0.0, p[1], p[2], p[3])?,
        };
        Ok(Some(params))
    }
}

impl fmt::Display for PmfModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PmfModel::Poisson => "poisson",
            PmfModel::Nb => "nb",
            PmfModel::NbBe => "nbbe",
            PmfModel::GnbBe => "gnbbe",
            PmfModel::Yule => "yule",
            PmfModel::Waring => "waring",
            PmfModel::GenWaring => "genwaring",
            PmfModel::BinBe => "binbe",
        })
    }
}

impl FromStr for PmfModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(kind) = s.parse::<ModelKind>() {
            return Ok(Self::from_kind(kind));
        }
        match s.to_ascii_lowercase().as_str() {
            "yule" => Ok(PmfModel::Yule),
            "waring" => Ok(PmfModel::Waring),
            "genwaring" | "gen-waring" => Ok(PmfModel::GenWaring),
            "binbe" | "bin-be" => Ok(PmfModel::BinBe),
            _ => Err(format!(
                "unknown model {s:?}; expected one of poisson, nb, nbbe, gnbbe, yule, waring, genwaring, binbe"
            )),
        }
    }
}

/// JSON form of a [`FitResult`]; field order is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ModelKind,
    pub params: IndexMap<String, f64>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub total_mass: f64,
    pub expected: Vec<f64>,
    pub converged: bool,
    pub seed: u64,
    pub starts_used: usize,
    pub n_evals: usize,
}

impl From<&FitResult> for FitReport {
    fn from(r: &FitResult) -> Self {
        Self {
            model: r.model,
            params: r.named_params().map(|(n, v)| (n.to_string(), v)).collect(),
            loglik: r.loglik,
            aic: r.aic,
            bic: r.bic,
            total_mass: r.total_mass,
            expected: r.expected.clone(),
            converged: r.converged,
            seed: r.seed,
            starts_used: r.starts_used,
            n_evals: r.n_evals,
        }
    }
}

#[derive(Debug, Serialize)]
struct CompareReport {
    fits: Vec<FitReport>,
    failed: IndexMap<String, String>,
    nesting_holds: Option<bool>,
}

#[derive(Debug, Serialize)]
struct PmfRow {
    x: u64,
    pmf: f64,
    cdf: f64,
}

#[derive(Debug, Serialize)]
struct DatasetReport<'a> {
    name: &'a str,
    total_n: u64,
    cells: Vec<(u64, u64)>,
}

/// Parses a command line (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

/// The embedded data set called `name`.
pub fn builtin_dataset(name: &str) -> crate::Result<FrequencyTable> {
    match name.to_ascii_lowercase().as_str() {
        "denuit1958" => FrequencyTable::from_frequencies(&DENUIT_1958),
        _ => Err(crate::Error::InvalidData(format!(
            "unknown data set {name:?} (built-in: denuit1958)"
        ))),
    }
}

fn parse_cell(field: &str, what: &str, line: u64) -> crate::Result<u64> {
    field.parse::<u64>().map_err(|_| {
        let reason = match field.parse::<f64>() {
            Ok(v) if v < 0.0 => "negative",
            _ => "malformed",
        };
        crate::Error::InvalidData(format!("line {line}: {reason} {what} {field:?}"))
    })
}

/// Reads two-column `count,frequency` CSV. A first row whose first field is
/// not numeric is taken as a header. Duplicate counts are summed.
pub fn load_frequency_csv(path: &Path) -> crate::Result<FrequencyTable> {
    let bytes = std::fs::read(path).map_err(|e| crate::Error::Io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut pairs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| crate::Error::InvalidData(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if record.len() != 2 {
            return Err(crate::Error::InvalidData(format!(
                "line {line}: expected 2 fields, found {}",
                record.len()
            )));
        }
        pairs.push((
            parse_cell(&record[0], "count", line)?,
            parse_cell(&record[1], "frequency", line)?,
        ));
    }
    if pairs.is_empty() {
        return Err(crate::Error::InvalidData(format!("{}: no data rows", path.display())));
    }
    FrequencyTable::new(pairs)
}

fn load_data(source: &str) -> crate::Result<FrequencyTable> {
    let path = Path::new(source);
    if !path.exists() {
        if let Ok(t) = builtin_dataset(source) {
            return Ok(t);
        }
        return Err(crate::Error::Io(format!(
            "{source:?} is neither a readable file nor a built-in data set (built-in: denuit1958)"
        )));
    }
    load_frequency_csv(path)
}

/// Formats like C's `%.6g`.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..6).contains(&exp) {
        trim(&format!("{:.*}", (5 - exp) as usize, v))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

/// Aligns rows into columns: first column left, others right.
fn render_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                line.push_str(&format!("{cell:<w$}", w = widths[0]));
            } else {
                line.push_str(&format!("  {cell:>w$}", w = widths[c]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable report")
}

fn tail_label(data: &FrequencyTable) -> String {
    format!(">{}", data.max_count())
}

fn fit_text(r: &FitResult, data: &FrequencyTable, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(&FitReport::from(r)) + "\n",
        OutputFormat::Csv => {
            let mut s = String::from("count,observed,expected\n");
            for (&(x, f), e) in data.cells().iter().zip(&r.expected) {
                s.push_str(&format!("{x},{f},{e}\n"));
            }
            s.push_str(&format!(
                "{},0,{}\n",
                tail_label(data),
                r.expected.last().copied().unwrap_or(0.0)
            ));
            s
        }
        OutputFormat::Table => {
            let mut rows = vec![vec!["model".to_string(), r.model.label().to_string()]];
            rows.extend(r.named_params().map(|(n, v)| vec![n.to_string(), sig6(v)]));
            rows.push(vec!["log-likelihood".into(), sig6(r.loglik)]);
            rows.push(vec!["AIC".into(), sig6(r.aic)]);
            rows.push(vec!["BIC".into(), sig6(r.bic)]);
            rows.push(vec!["total mass".into(), sig6(r.total_mass)]);
            rows.push(vec!["converged".into(), yes_no(r.converged)]);
            rows.push(vec!["starts".into(), r.starts_used.to_string()]);
            rows.push(vec!["evaluations".into(), r.n_evals.to_string()]);
            rows.push(vec!["seed".into(), r.seed.to_string()]);
            let mut s = render_table(&rows);
            s.push('\n');
            let mut cells = vec![vec!["count".to_string(), "observed".into(), "expected".into()]];
            for (&(x, f), e) in data.cells().iter().zip(&r.expected) {
                cells.push(vec![x.to_string(), f.to_string(), sig6(*e)]);
            }
            cells.push(vec![
                tail_label(data),
                "0".into(),
                sig6(r.expected.last().copied().unwrap_or(0.0)),
            ]);
            cells.push(vec![
                "total".into(),
                data.total_n().to_string(),
                sig6(r.expected.iter().sum()),
            ]);
            s + &render_table(&cells)
        }
    }
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

fn compare_text(
    outcomes: &[(ModelKind, std::result::Result<FitResult, crate::Error>)],
    nesting_holds: Option<bool>,
    data: &FrequencyTable,
    format: OutputFormat,
) -> String {
    let fits: Vec<(ModelKind, &FitResult)> = outcomes
        .iter()
        .filter_map(|(k, r)| r.as_ref().ok().map(|r| (*k, r)))
        .collect();
    match format {
        OutputFormat::Json => {
            let report = CompareReport {
                fits: fits.iter().map(|(_, r)| FitReport::from(*r)).collect(),
                failed: outcomes
                    .iter()
                    .filter_map(|(k, r)| r.as_ref().err().map(|e| (k.name().to_string(), e.to_string())))
                    .collect(),
                nesting_holds,
            };
            to_json(&report) + "\n"
        }
        OutputFormat::Csv => {
            let mut s = String::from("count,observed");
            for (k, _) in &fits {
                s.push_str(&format!(",{}", k.name()));
            }
            s.push('\n');
            for (i, &(x, f)) in data.cells().iter().enumerate() {
                s.push_str(&format!("{x},{f}"));
                for (_, r) in &fits {
                    s.push_str(&format!(",{}", r.expected[i]));
                }
                s.push('\n');
            }
            s.push_str(&format!("{},0", tail_label(data)));
            for (_, r) in &fits {
                s.push_str(&format!(",{}", r.expected.last().copied().unwrap_or(0.0)));
            }
            s.push('\n');
            s
        }
        OutputFormat::Table => {
            let mut header = vec!["Count".to_string(), "Observed".into()];
            header.extend(fits.iter().map(|(k, _)| k.label().to_string()));
            let mut rows = vec![header];
            for (i, &(x, f)) in data.cells().iter().enumerate() {
                let mut row = vec![x.to_string(), f.to_string()];
                row.extend(fits.iter().map(|(_, r)| sig6(r.expected[i])));
                rows.push(row);
            }
            let mut tail = vec![tail_label(data), "0".into()];
            tail.extend(
                fits.iter()
                    .map(|(_, r)| sig6(r.expected.last().copied().unwrap_or(0.0))),
            );
            rows.push(tail);
            let mut total = vec!["Total".to_string(), data.total_n().to_string()];
            total.extend(fits.iter().map(|(_, r)| sig6(r.expected.iter().sum())));
            rows.push(total);
            rows.push(vec!["Estimates".to_string()]);
            let mut names: Vec<&str> = Vec::new();
            for (k, _) in &fits {
                for n in k.param_names() {
                    if !names.contains(n) {
                        names.push(n);
                    }
                }
            }
            for name in names {
                let mut row = vec![name.to_string(), String::new()];
                row.extend(fits.iter().map(|(_, r)| r.param(name).map(sig6).unwrap_or_default()));
                rows.push(row);
            }
            for (label, get) in [
                (
                    "Log-likelihood",
                    (|r: &FitResult| sig6(r.loglik)) as fn(&FitResult) -> String,
                ),
                ("AIC", |r| sig6(r.aic)),
                ("BIC", |r| sig6(r.bic)),
                ("Total mass", |r| sig6(r.total_mass)),
                ("Converged", |r| yes_no(r.converged)),
            ] {
                let mut row = vec![label.to_string(), String::new()];
                row.extend(fits.iter().map(|(_, r)| get(r)));
                rows.push(row);
            }
            let mut s = render_table(&rows);
            for (k, r) in outcomes {
                if let Err(e) = r {
                    s.push_str(&format!("{} failed: {e}\n", k.label()));
                }
            }
            s
        }
    }
}

/// Resolves model and parameter vector from `--model/--params` or `--from-fit`.
fn resolve_model(args: &ModelArgs) -> CliResult<(PmfModel, Vec<f64>)> {
    let (model, given): (PmfModel, Vec<(String, f64)>) = match &args.from_fit {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let report: FitReport = serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: not a fit result: {e}", path.display())))?;
            let model = PmfModel::from_kind(report.model);
            if let Some(m) = args.model {
                if m != model {
                    return Err(CliError::Usage(format!(
                        "--model {m} does not match the {model} fit in {}",
                        path.display()
                    )));
                }
            }
            (model, report.params.into_iter().collect())
        }
        None => {
            let model = args
                .model
                .ok_or_else(|| CliError::Usage("--model is required".into()))?;
            (model, args.params.clone())
        }
    };
    let names = model.param_names();
    let mut values = vec![None; names.len()];
    for (name, v) in given {
        let i = names.iter().position(|n| *n == name).ok_or_else(|| {
            CliError::Usage(format!(
                "{model} has no parameter {name:?} (expects {})",
                names.join(", ")
            ))
        })?;
        if values[i].replace(v).is_some() {
            return Err(CliError::Usage(format!("parameter {name:?} given twice")));
        }
    }
    let missing: Vec<&str> = names
        .iter()
        .zip(&values)
        .filter(|(_, v)| v.is_none())
        .map(|(n, _)| *n)
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Usage(format!(
            "{model} is missing parameter(s): {}",
            missing.join(", ")
        )));
    }
    Ok((model, values.into_iter().map(Option::unwrap).collect()))
}

fn run_fit(args: &FitArgs, out: &mut dyn Write) -> CliResult<i32> {
    let data = load_data(&args.data)?;
    let result = fit(args.model, &data, &args.search.options())?;
    write_out(out, &fit_text(&result, &data, args.output.format()))?;
    Ok(if result.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn run_compare(args: &CompareArgs, out: &mut dyn Write) -> CliResult<i32> {
    let data = load_data(&args.data)?;
    let comparison = compare_models(&data, &ModelKind::ALL, &args.search.options())?;
    // Table 1 column order rather than the AIC ranking
    let outcomes: Vec<(ModelKind, std::result::Result<FitResult, crate::Error>)> = ModelKind::ALL
        .iter()
        .filter_map(|&k| comparison.entries.iter().find(|e| e.model == k))
        .map(|e| (e.model, e.result.clone()))
        .collect();
    write_out(
        out,
        &compare_text(&outcomes, comparison.nesting_holds, &data, args.output.format()),
    )?;
    let all_converged = outcomes.iter().all(|(_, r)| r.as_ref().is_ok_and(|r| r.converged));
    Ok(if all_converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn run_pmf(args: &PmfArgs, out: &mut dyn Write) -> CliResult<i32> {
    let (model, params) = resolve_model(&args.model)?;
    let mut rows = Vec::new();
    let mut cdf = 0.0;
    for x in 0..=args.max_count {
        let pmf = model.log_pmf(&params, x)?.exp();
        cdf += pmf;
        rows.push(PmfRow { x, pmf, cdf });
    }
    let text = match args.output.format() {
        OutputFormat::Json => to_json(&rows) + "\n",
        OutputFormat::Csv => {
            let mut s = String::from("x,pmf,cdf\n");
            for r in &rows {
                s.push_str(&format!("{},{},{}\n", r.x, r.pmf, r.cdf));
            }
            s
        }
        OutputFormat::Table => {
            let mut table = vec![vec!["x".to_string(), "pmf".into(), "cdf".into()]];
            table.extend(rows.iter().map(|r| vec![r.x.to_string(), sig6(r.pmf), sig6(r.cdf)]));
            let mut s = render_table(&table);
            if let Some(p) = model.as_gnbbe(&params)? {
                let report = total_mass(&p, args.tail_tol, DEFAULT_X_CAP)?;
                let note = if report.converged {
                    ""
                } else {
                    " (tail sum not converged)"
                };
                s.push_str(&format!("total mass {}{note}\n", sig6(report.mass)));
            }
            s
        }
    };
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

/// Inverse-cdf draw for the laws without a mixture sampler.
fn sample_by_inversion(model: PmfModel, params: &[f64], rng: &mut RandomSource) -> crate::Result<u64> {
    let u = rng.next_uniform();
    let mut cdf = 0.0;
    for x in 0..=DEFAULT_X_CAP * 100 {
        cdf += model.log_pmf(params, x)?.exp();
        if u < cdf {
            return Ok(x);
        }
    }
    Err(crate::Error::Domain(format!(
        "{model} inverse cdf did not reach u = {u}"
    )))
}

fn run_sample(args: &SampleArgs, out: &mut dyn Write) -> CliResult<i32> {
    let (model, params) = resolve_model(&args.model)?;
    let mixture = model.as_gnbbe(&params)?;
    if mixture.is_none() {
        model.log_pmf(&params, 0)?;
    }
    let mut rng = RandomSource::with_stream(args.seed, args.stream);
    let mut text = String::new();
    for _ in 0..args.n {
        let x = match &mixture {
            Some(p) => sample_gnbbe(p, &mut rng)?,
            None => sample_by_inversion(model, &params, &mut rng)?,
        };
        text.push_str(&x.to_string());
        text.push('\n');
    }
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

fn run_dataset(args: &DatasetArgs, out: &mut dyn Write) -> CliResult<i32> {
    let data = load_data(&args.data)?;
    let text = match args.output.format() {
        OutputFormat::Json => {
            to_json(&DatasetReport {
                name: &args.data,
                total_n: data.total_n(),
                cells: data.cells().to_vec(),
            }) + "\n"
        }
        OutputFormat::Csv => {
            let mut s = String::from("count,frequency\n");
            for (x, f) in data.cells() {
                s.push_str(&format!("{x},{f}\n"));
            }
            s
        }
        OutputFormat::Table => {
            let mut rows = vec![vec!["count".to_string(), "frequency".into()]];
            rows.extend(data.cells().iter().map(|(x, f)| vec![x.to_string(), f.to_string()]));
            rows.push(vec!["total".into(), data.total_n().to_string()]);
            render_table(&rows)
        }
    };
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Data(format!("writing output: {e}")))
}

/// Executes a parsed command and returns its exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<i32> {
    match &cli.command {
        Command::Fit(a) => run_fit(a, out),
        Command::Pmf(a) => run_pmf(a, out),
        Command::Sample(a) => run_sample(a, out),
        Command::Compare(a) => run_compare(a, out),
        Command::Dataset(a) => run_dataset(a, out),
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
/// Errors go to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_args(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
