//! Text formats for matrices, observations and samples, config parsing, and
//! CSV/JSON report output.
//!
//! Matrix, observation and sample files print floats with 17 significant
//! digits, which round-trips every `f64` exactly. JSON uses the shortest
//! round-trip representation.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::estimators::{check_entry, Observation, ObservationSet, SampleSet};
use crate::harness::{ExperimentConfig, ExperimentReport, TrialRecord};
use crate::linalg::{Matrix, SymmetricMatrix};
use crate::probe::LemmaReport;

/// Largest `|a_ij − a_ji|` accepted when reading a matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::format(line, format!("cannot parse {what} from `{tok}`")))
}

fn parse_floats(l: &str, line: usize, expected: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = l
        .split_whitespace()
        .map(|t| parse_num::<f64>(t, line, "a number"))
        .collect::<Result<_>>()?;
    if vals.len() != expected {
        return Err(Error::format(
            line,
            format!("expected {expected} values, found {}", vals.len()),
        ));
    }
    if let Some(x) = vals.iter().find(|x| !x.is_finite()) {
        return Err(Error::format(line, format!("non-finite value {x}")));
    }
    Ok(vals)
}

fn header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    tag: &str,
    arity: usize,
) -> Result<(usize, Vec<&'a str>)> {
    let (line, l) = lines
        .next()
        .ok_or_else(|| Error::format(1, format!("missing `{tag}` header")))?;
    let toks: Vec<&str> = l.split_whitespace().collect();
    if toks.first() != Some(&tag) || toks.len() != arity + 1 {
        return Err(Error::format(line, format!("expected header `{tag}` with {arity} fields, got `{l}`")));
    }
    Ok((line, toks[1..].to_vec()))
}

fn no_trailing<'a>(mut lines: impl Iterator<Item = (usize, &'a str)>) -> Result<()> {
    match lines.next() {
        Some((line, _)) => Err(Error::format(line, "unexpected trailing content")),
        None => Ok(()),
    }
}

/// Parses `sym n` followed by `n` rows of `n` floats.
pub fn parse_matrix(text: &str) -> Result<SymmetricMatrix> {
    let mut lines = content_lines(text);
    let (hl, h) = header(&mut lines, "sym", 1)?;
    let n: usize = parse_num(h[0], hl, "dimension")?;
    if n == 0 {
        return Err(Error::format(hl, "dimension must be at least 1"));
    }
    let mut data = Vec::with_capacity(n * n);
    let mut last = hl;
    for r in 0..n {
        let (line, l) = lines
            .next()
            .ok_or_else(|| Error::format(last + 1, format!("expected {n} rows, found {r}")))?;
        data.extend(parse_floats(l, line, n)?);
        last = line;
    }
    no_trailing(lines)?;
    let m = Matrix::from_vec(n, n, data)?;
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::format(
                    hl + 1 + j,
                    format!("asymmetric entry ({}, {}) differs from ({}, {})", j + 1, i + 1, i + 1, j + 1),
                ));
            }
        }
    }
    SymmetricMatrix::symmetrize(&m)
}

pub fn format_matrix(a: &SymmetricMatrix) -> String {
    let n = a.n();
    let mut out = format!("sym {n}\n");
    for i in 0..n {
        let row: Vec<String> = a.as_matrix().row(i).iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<SymmetricMatrix> {
    parse_matrix(&read_text(path)?)
}

pub fn write_matrix(a: &SymmetricMatrix, path: &Path) -> Result<()> {
    write_text(path, &format_matrix(a))
}

/// Parses `obs n p count` followed by `count` lines `i j value`.
pub fn parse_observations(text: &str) -> Result<ObservationSet> {
    let mut lines = content_lines(text);
    let (hl, h) = header(&mut lines, "obs", 3)?;
    let n: usize = parse_num(h[0], hl, "dimension")?;
    let p: f64 = parse_num(h[1], hl, "probability")?;
    let count: usize = parse_num(h[2], hl, "count")?;
    let mut entries = Vec::with_capacity(count);
    let mut seen = HashSet::with_capacity(count);
    let mut last = hl;
    for r in 0..count {
        let (line, l) = lines
            .next()
            .ok_or_else(|| Error::format(last + 1, format!("expected {count} entries, found {r}")))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::format(line, "expected `i j value`"));
        }
        let e = Observation {
            i: parse_num(toks[0], line, "a row index")?,
            j: parse_num(toks[1], line, "a column index")?,
            value: parse_num(toks[2], line, "a value")?,
        };
        check_entry(&e, n, &mut seen).map_err(|err| match err {
            Error::InvalidInput(msg) => Error::format(line, msg),
            other => other,
        })?;
        entries.push(e);
        last = line;
    }
    no_trailing(lines)?;
    ObservationSet::new(n, p, entries).map_err(|e| match e {
        Error::InvalidInput(msg) | Error::Argument { msg, .. } => Error::format(hl, msg),
        other => other,
    })
}

pub fn format_observations(obs: &ObservationSet) -> String {
    let mut out = format!("obs {} {} {}\n", obs.n(), fmt_f64(obs.p()), obs.len());
    for e in obs.entries() {
        out.push_str(&format!("{} {} {}\n", e.i, e.j, fmt_f64(e.value)));
    }
    out
}

pub fn read_observations(path: &Path) -> Result<ObservationSet> {
    parse_observations(&read_text(path)?)
}

pub fn write_observations(obs: &ObservationSet, path: &Path) -> Result<()> {
    write_text(path, &format_observations(obs))
}

/// Parses `samples N n` followed by `N` rows of `n` floats.
pub fn parse_samples(text: &str) -> Result<SampleSet> {
    let mut lines = content_lines(text);
    let (hl, h) = header(&mut lines, "samples", 2)?;
    let count: usize = parse_num(h[0], hl, "sample count")?;
    let n: usize = parse_num(h[1], hl, "dimension")?;
    if count == 0 || n == 0 {
        return Err(Error::format(hl, "sample count and dimension must be positive"));
    }
    let mut data = Vec::with_capacity(count * n);
    let mut last = hl;
    for r in 0..count {
        let (line, l) = lines
            .next()
            .ok_or_else(|| Error::format(last + 1, format!("expected {count} rows, found {r}")))?;
        data.extend(parse_floats(l, line, n)?);
        last = line;
    }
    no_trailing(lines)?;
    SampleSet::new(Matrix::from_vec(count, n, data)?)
}

pub fn format_samples(s: &SampleSet) -> String {
    let mut out = format!("samples {} {}\n", s.count(), s.n());
    for i in 0..s.count() {
        let row: Vec<String> = s.samples().row(i).iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_samples(path: &Path) -> Result<SampleSet> {
    parse_samples(&read_text(path)?)
}

pub fn write_samples(s: &SampleSet, path: &Path) -> Result<()> {
    write_text(path, &format_samples(s))
}

/// Parses and validates a TOML experiment config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let field = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.starts_with("unknown field") || msg.starts_with("missing field"))
            .unwrap_or("config")
            .to_string();
        Error::config(field, msg)
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&read_text(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    Experiment(&'a ExperimentReport),
    Lemma(&'a LemmaReport),
    Bound(&'a BoundReport),
    Bounds(&'a [BoundReport]),
}

/// Column order of experiment CSV output.
pub const TRIAL_COLUMNS: [&str; 26] = [
    "trial_id",
    "k",
    "measured_error_f",
    "measured_error_2",
    "tail_f",
    "tail_2",
    "ratio",
    "bound_value",
    "bound_satisfied",
    "precondition_holds",
    "precondition_margin",
    "failure",
    "mu0",
    "gamma_k",
    "stable_rank",
    "effective_rank",
    "perturbation_norm",
    "m1",
    "m2",
    "alignment",
    "p",
    "observed_count",
    "nu",
    "delta",
    "cutoff_valid",
    "sample_cov_error_f",
];

pub const LEMMA_COLUMNS: [&str; 5] = ["name", "lhs", "bound", "slack", "status"];

pub const BOUND_COLUMNS: [&str; 13] = [
    "name",
    "value",
    "precondition_holds",
    "precondition_margin",
    "k",
    "eps",
    "delta",
    "sigma_k_plus_1",
    "gap",
    "tail_f",
    "tail_2",
    "head_f",
    "nu",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn trial_row(r: &TrialRecord) -> Vec<String> {
    let a = &r.auxiliary;
    vec![
        r.trial_id.to_string(),
        r.k.to_string(),
        r.measured_error_f.to_string(),
        r.measured_error_2.to_string(),
        r.tail_f.to_string(),
        r.tail_2.to_string(),
        opt(r.ratio),
        r.bound_value.to_string(),
        r.bound_satisfied.to_string(),
        r.precondition_holds.to_string(),
        r.precondition_margin.to_string(),
        opt(r.failure.as_deref()),
        opt(a.mu0),
        opt(a.gamma_k),
        opt(a.stable_rank),
        opt(a.effective_rank),
        opt(a.perturbation_norm),
        opt(a.m1),
        opt(a.m2),
        opt(a.alignment),
        opt(a.p),
        opt(a.observed_count),
        opt(a.nu),
        opt(a.delta),
        opt(a.cutoff_valid),
        opt(a.sample_cov_error_f),
    ]
}

fn bound_row(b: &BoundReport) -> Vec<String> {
    let e = &b.inputs_echo;
    vec![
        b.name.clone(),
        b.value.to_string(),
        b.precondition_holds.to_string(),
        b.precondition_margin.to_string(),
        opt(e.k),
        opt(e.eps),
        opt(e.delta),
        opt(e.sigma_k_plus_1),
        opt(e.gap),
        opt(e.tail_f),
        opt(e.tail_2),
        opt(e.head_f),
        opt(e.nu),
    ]
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_text<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)
        .map_err(|e| Error::InvalidInput(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn render_report(report: Report<'_>, format: ReportFormat) -> Result<String> {
    match (report, format) {
        (Report::Experiment(r), ReportFormat::Json) => json_text(r),
        (Report::Lemma(r), ReportFormat::Json) => json_text(r),
        (Report::Bound(r), ReportFormat::Json) => json_text(r),
        (Report::Bounds(r), ReportFormat::Json) => json_text(r),
        (Report::Experiment(r), ReportFormat::Csv) => {
            csv_text(&TRIAL_COLUMNS, r.records.iter().map(trial_row))
        }
        (Report::Lemma(r), ReportFormat::Csv) => csv_text(
            &LEMMA_COLUMNS,
            r.checks.iter().map(|c| {
                vec![
                    c.name.clone(),
                    c.lhs.to_string(),
                    c.bound.to_string(),
                    c.slack.to_string(),
                    serde_json::to_value(c.status)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                ]
            }),
        ),
        (Report::Bound(r), ReportFormat::Csv) => csv_text(&BOUND_COLUMNS, std::iter::once(bound_row(r))),
        (Report::Bounds(r), ReportFormat::Csv) => csv_text(&BOUND_COLUMNS, r.iter().map(bound_row)),
    }
}

pub fn emit_report(report: Report<'_>, format: ReportFormat, path: &Path) -> Result<()> {
    write_text(path, &render_report(report, format)?)
}
