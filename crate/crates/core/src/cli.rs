//! Command-line front end. Results go to `out`, diagnostics to `err`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::eval::loo_eval;
use crate::io::{ingest_csv, load_model, read_csv, read_queries, save_model, SchemaConfig, StoredModel};
use crate::model::{build_casebase, Query};
use crate::profiler::{categorical_profile, numeric_profile};
use crate::retrieval::{retrieve, retrieve_batch, RetrievalResult};
use crate::similarity::{synthesize_model, LocalMeasure};

#[derive(Debug, Parser)]
#[command(name = "casesim", version, about = "Data-driven similarity measures and case retrieval")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print per-attribute statistics of a CSV file.
    Profile {
        data: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Derive similarity measures from a CSV file and write a model.
    Build {
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Similarity at a distance of one IQR (default 0.30).
        #[arg(long = "target-sim")]
        target_sim: Option<f64>,
    },
    /// Retrieve the cases most similar to a `name=value,...` literal.
    Query {
        model: PathBuf,
        #[arg(long = "case")]
        case: String,
        #[arg(short = 'k', default_value_t = 5)]
        k: usize,
    },
    /// Retrieve for every row of a query CSV.
    RetrieveBatch {
        model: PathBuf,
        queries: PathBuf,
        #[arg(short = 'k', default_value_t = 5)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leave-one-out label agreement of the model against a Euclidean baseline.
    Eval {
        model: PathBuf,
        data: PathBuf,
        #[arg(long)]
        label: String,
        #[arg(short = 'k', default_value_t = 1)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] Error),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("cannot write output: {e}"))
    }
}

type CliResult = std::result::Result<(), CliError>;

/// Formats `x` with `decimals` digits, rounding half away from zero on the
/// shortest decimal representation of `x`.
pub fn round_half_up(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let repr = format!("{}", x.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut digits: Vec<u8> = int_part
        .bytes()
        .chain(frac_part.bytes().chain(std::iter::repeat(b'0')).take(decimals))
        .map(|b| b - b'0')
        .collect();
    if frac_part.as_bytes().get(decimals).is_some_and(|&d| d >= b'5') {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - decimals;
    let text: String = digits.iter().map(|d| char::from(b'0' + d)).collect();
    let negative = x.is_sign_negative() && digits.iter().any(|&d| d != 0);
    let sign = if negative { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{text}")
    } else {
        format!("{sign}{}.{}", &text[..split], &text[split..])
    }
}

fn r4(x: f64) -> String {
    round_half_up(x, 4)
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Profile { data, schema } => cmd_profile(&data, schema.as_deref(), out, err),
        Command::Build {
            data,
            out: model_path,
            schema,
            target_sim,
        } => cmd_build(&data, &model_path, schema.as_deref(), target_sim, out, err),
        Command::Query { model, case, k } => cmd_query(&model, &case, k, out),
        Command::RetrieveBatch {
            model,
            queries,
            k,
            out: report,
        } => cmd_retrieve_batch(&model, &queries, k, report.as_deref(), out, err),
        Command::Eval {
            model,
            data,
            label,
            k,
            out: report,
        } => cmd_eval(&model, &data, &label, k, report.as_deref(), out, err),
    }
}

fn load_config(path: Option<&Path>) -> Result<Option<SchemaConfig>, Error> {
    path.map(SchemaConfig::load).transpose()
}

pub fn cmd_profile(data: &Path, schema: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let config = load_config(schema)?;
    let dataset = ingest_csv(data, config.as_ref())?;
    let cb = build_casebase(&dataset.records, dataset.schema, dataset.id_column.as_deref())?;
    writeln!(
        out,
        "{:<12} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "attribute", "count", "mean", "min", "max", "q1", "q3", "iqr", "range"
    )?;
    let mut categorical = Vec::new();
    for (i, spec) in cb.schema().attributes().iter().enumerate() {
        if spec.is_numeric() {
            let column: Vec<f64> = cb.column(i).filter_map(|v| v.as_number()).collect();
            let p = numeric_profile(&column)?;
            writeln!(
                out,
                "{:<12} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
                spec.name,
                p.count,
                r4(p.mean),
                r4(p.min),
                r4(p.max),
                r4(p.q1),
                r4(p.q3),
                r4(p.iqr),
                r4(p.range)
            )?;
            if p.is_degenerate() {
                writeln!(
                    err,
                    "warning: `{}` has degenerate spread (IQR {}, range {})",
                    spec.name,
                    r4(p.iqr),
                    r4(p.range)
                )?;
            }
        } else {
            categorical.push((spec.name.clone(), categorical_profile(cb.column(i).filter_map(|v| v.as_label()))));
        }
    }
    for (name, inventory) in categorical {
        let counts: Vec<String> = inventory
            .labels
            .iter()
            .map(|l| format!("{}={}", l.label, l.count))
            .collect();
        writeln!(out, "{:<12} {:>6} {}", name, inventory.total(), counts.join(", "))?;
    }
    Ok(())
}

pub fn cmd_build(
    data: &Path,
    model_path: &Path,
    schema: Option<&Path>,
    target_sim: Option<f64>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let config = load_config(schema)?.unwrap_or_default();
    let dataset = ingest_csv(data, Some(&config))?;
    let cb = build_casebase(&dataset.records, dataset.schema, dataset.id_column.as_deref())?;
    let mut options = config.synthesis_options();
    if let Some(t) = target_sim {
        options.target_at_iqr = t;
    }
    let synthesis = synthesize_model(&cb, &options)?;
    for w in &synthesis.warnings {
        writeln!(err, "warning: {w}")?;
    }
    let stored = StoredModel {
        model: synthesis.model,
        casebase: cb,
        id_column: dataset.id_column,
    };
    save_model(&stored, model_path)?;

    writeln!(out, "{:<12} {:<12} {:>8} {:>8} {:>8}", "attribute", "measure", "degree", "anchor", "weight")?;
    for (spec, attr) in stored.model.schema().attributes().iter().zip(stored.model.attributes()) {
        let (degree, anchor) = match &attr.measure {
            LocalMeasure::Polynomial(m) => (r4(m.degree()), r4(m.anchor_range())),
            _ => ("-".to_string(), "-".to_string()),
        };
        writeln!(
            out,
            "{:<12} {:<12} {:>8} {:>8} {:>8}",
            spec.name,
            attr.measure.kind_name(),
            degree,
            anchor,
            r4(attr.weight)
        )?;
    }
    writeln!(err, "wrote {} ({} cases)", model_path.display(), stored.casebase.len())?;
    Ok(())
}

/// Parses `name=value,name=value`.
pub fn parse_case_literal(literal: &str) -> Result<Vec<(String, String)>, Error> {
    literal
        .split(',')
        .filter(|token| !token.trim().is_empty())
        .map(|token| {
            token
                .split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .filter(|(k, _)| !k.is_empty())
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("expected `name=value`, got `{}`", token.trim()))
                })
        })
        .collect()
}

fn write_ranking(result: &RetrievalResult, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{:>4} {:>8} {:>10}  breakdown", "rank", "case", "similarity")?;
    for (rank, entry) in result.entries.iter().enumerate() {
        let breakdown: Vec<String> = entry
            .breakdown
            .iter()
            .map(|l| format!("{}={}", l.attribute, r4(l.similarity)))
            .collect();
        writeln!(
            out,
            "{:>4} {:>8} {:>10}  {}",
            rank + 1,
            entry.case_id.to_string(),
            r4(entry.similarity),
            breakdown.join(" ")
        )?;
    }
    Ok(())
}

pub fn cmd_query(model_path: &Path, literal: &str, k: usize, out: &mut dyn Write) -> CliResult {
    let stored = load_model(model_path)?;
    let pairs = parse_case_literal(literal)?;
    let query = Query::from_pairs(
        pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())),
        stored.model.schema(),
    )?;
    let result = retrieve(&stored.model, &stored.casebase, &query, k)?;
    write_ranking(&result, out)?;
    Ok(())
}

pub fn cmd_retrieve_batch(
    model_path: &Path,
    queries_path: &Path,
    k: usize,
    report: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let stored = load_model(model_path)?;
    let parsed = read_queries(queries_path, stored.model.schema())?;
    let valid: Vec<Query> = parsed.iter().filter_map(|q| q.as_ref().ok().cloned()).collect();
    let mut results = retrieve_batch(&stored.model, &stored.casebase, &valid, k).into_iter();
    let mut failures = 0usize;
    let mut json = Vec::with_capacity(parsed.len());
    for (index, parsed_query) in parsed.into_iter().enumerate() {
        let outcome = match parsed_query {
            Ok(_) => results.next().expect("one result per valid query").map_err(|b| b.error),
            Err(e) => Err(e),
        };
        match outcome {
            Ok(result) => {
                writeln!(out, "query {index}")?;
                write_ranking(&result, out)?;
                json.push(serde_json::json!({ "index": index, "result": result }));
            }
            Err(e) => {
                failures += 1;
                writeln!(err, "query {index}: {e}")?;
                json.push(serde_json::json!({ "index": index, "error": e.to_string() }));
            }
        }
    }
    if let Some(path) = report {
        let text = serde_json::to_string_pretty(&json).map_err(Error::from)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    if failures > 0 {
        return Err(Error::InvalidArgument(format!("{failures} queries failed")).into());
    }
    Ok(())
}

pub fn cmd_eval(
    model_path: &Path,
    data: &Path,
    label: &str,
    k: usize,
    report: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let stored = load_model(model_path)?;
    let schema = stored.model.schema();
    if !schema.get(label).is_some_and(|a| a.is_categorical()) {
        return Err(Error::LabelMissing {
            attribute: label.to_string(),
        }
        .into());
    }
    let (_, records) = read_csv(data)?;
    let cb = build_casebase(&records, schema.clone(), stored.id_column.as_deref())?;
    if cb.len() >= 2 && k > cb.len() - 1 {
        writeln!(err, "warning: k = {k} exceeds the {} other cases, clamping", cb.len() - 1)?;
    }
    let report_data = loo_eval(&stored.model, &cb, k, label)?;
    writeln!(
        out,
        "leave-one-out over {} cases, label `{}`, k = {}",
        report_data.cases, report_data.label_attribute, report_data.k
    )?;
    writeln!(out, "{:<10} {:>15} {:>21}", "method", "top1_agreement", "mean_top1_similarity")?;
    for m in [&report_data.cbr, &report_data.baseline] {
        writeln!(
            out,
            "{:<10} {:>15} {:>21}",
            m.method,
            r4(m.top1_agreement),
            r4(m.mean_top1_similarity)
        )?;
    }
    if let Some(path) = report {
        std::fs::write(path, report_data.to_json()? + "\n").map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    Ok(())
}

/// Parses arguments and runs, returning the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match run(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
