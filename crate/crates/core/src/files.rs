//! Model files, traces and report tables.
//!
//! Models are TOML:
//!
//! ```toml
//! format_version = 1
//! num_states = 25
//! constraints = [2, 7, 15]   # row-major state indices
//!
//! [[clusters]]
//! prior = 0.5
//! weights = [0.1, 1.3, -0.8, -1.0]   # Normal, Grass, Rocks, Water
//! ```
//!
//! Tables (traces, reports, sweep results) are CSV preceded by `# key = value`
//! metadata lines, the first of which is always `# format_version = 1`.
//! Inside a cell, lists are `;`-separated and per-cluster groups are
//! `|`-separated.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::inference::{AcceptedConstraint, MixtureModel, TraceRecord};
use crate::maxent::PreferenceWeights;
use crate::metrics::ExperimentReport;

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    num_states: usize,
    constraints: Vec<usize>,
    clusters: Vec<ClusterEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterEntry {
    prior: f64,
    weights: PreferenceWeights,
}

#[derive(Deserialize)]
struct VersionOnly {
    format_version: Option<u32>,
}

/// Checks `format_version` before the full parse, so files from a newer
/// version fail with a version error rather than a field error.
pub(crate) fn check_toml_version(text: &str, origin: &str, expected: u32) -> Result<()> {
    let v: VersionOnly = toml::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
    match v.format_version {
        None => Err(Error::parse(origin, "missing field `format_version`")),
        Some(found) if found != expected => Err(Error::FormatVersion { found, expected }),
        Some(_) => Ok(()),
    }
}

pub fn render_model(model: &MixtureModel) -> String {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        num_states: model.constraints.num_states(),
        constraints: model.constraints.to_vec(),
        clusters: model
            .weights
            .iter()
            .zip(&model.priors)
            .map(|(w, &prior)| ClusterEntry { prior, weights: *w })
            .collect(),
    };
    toml::to_string(&file).expect("model serializes")
}

pub fn parse_model(text: &str, origin: &str) -> Result<MixtureModel> {
    check_toml_version(text, origin, MODEL_FORMAT_VERSION)?;
    let file: ModelFile = toml::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
    if file.clusters.is_empty() {
        return Err(Error::parse(origin, "field `clusters`: at least one cluster required"));
    }
    if let Some(&s) = file.constraints.iter().find(|&&s| s >= file.num_states) {
        return Err(Error::parse(origin, format!("field `constraints`: state {s} out of range")));
    }
    let total: f64 = file.clusters.iter().map(|c| c.prior).sum();
    if file.clusters.iter().any(|c| !(c.prior >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::parse(origin, "field `prior`: priors must be non-negative and sum to 1"));
    }
    Ok(MixtureModel {
        weights: file.clusters.iter().map(|c| c.weights).collect(),
        priors: file.clusters.iter().map(|c| c.prior).collect(),
        constraints: ConstraintSet::from_states(file.num_states, file.constraints),
    })
}

pub fn save_model(model: &MixtureModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MixtureModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, &path.display().to_string())
}

/// A parsed table: metadata, header and string cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn render(&self) -> String {
        let mut out = format!("# format_version = {TABLE_FORMAT_VERSION}\n");
        for (k, v) in self.meta.iter().filter(|(k, _)| k.as_str() != "format_version") {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input"));
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut body_start = 0;
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else { break };
            body_start += line.len() + 1;
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        match meta.get("format_version").map(|v| v.parse::<u32>()) {
            Some(Ok(TABLE_FORMAT_VERSION)) => {}
            Some(Ok(found)) => return Err(Error::FormatVersion { found, expected: TABLE_FORMAT_VERSION }),
            _ => return Err(Error::parse(origin, "missing `# format_version` header")),
        }
        let body = text.get(body_start.min(text.len())..).unwrap_or("");
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { meta, header, rows })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

pub(crate) fn join<T: ToString>(xs: impl IntoIterator<Item = T>, sep: &str) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

pub(crate) fn split_f64(cell: &str, sep: char, origin: &str) -> Result<Vec<f64>> {
    if cell.is_empty() {
        return Ok(vec![]);
    }
    cell.split(sep)
        .map(|x| x.parse().map_err(|_| Error::parse(origin, format!("not a number: {x:?}"))))
        .collect()
}

const TRACE_HEADER: [&str; 6] = ["iteration", "avg_log_likelihood", "num_constraints", "accepted", "priors", "weights"];

pub fn trace_table(trace: &[TraceRecord]) -> Table {
    let mut t = Table::new(&TRACE_HEADER).with_meta("kind", "trace");
    for r in trace {
        t.rows.push(vec![
            r.iteration.to_string(),
            r.avg_log_likelihood.to_string(),
            r.num_constraints.to_string(),
            join(r.accepted.iter().map(|a| format!("{}:{}", a.state, a.gain)), ";"),
            join(&r.priors, ";"),
            join(r.weights.iter().map(|w| join(w.0, ";")), "|"),
        ]);
    }
    t
}

pub fn parse_trace(table: &Table, origin: &str) -> Result<Vec<TraceRecord>> {
    if table.header != TRACE_HEADER {
        return Err(Error::parse(origin, "unexpected trace columns"));
    }
    let num = |s: &str| -> Result<usize> { s.parse().map_err(|_| Error::parse(origin, format!("not an integer: {s:?}"))) };
    table
        .rows
        .iter()
        .map(|r| {
            let accepted = if r[3].is_empty() {
                vec![]
            } else {
                r[3].split(';')
                    .map(|pair| {
                        let (s, g) = pair
                            .split_once(':')
                            .ok_or_else(|| Error::parse(origin, format!("bad accepted entry {pair:?}")))?;
                        let gain = g.parse().map_err(|_| Error::parse(origin, format!("bad gain {g:?}")))?;
                        Ok(AcceptedConstraint { state: num(s)?, gain })
                    })
                    .collect::<Result<_>>()?
            };
            let weights = r[5]
                .split('|')
                .map(|w| {
                    let v = split_f64(w, ';', origin)?;
                    let arr: [f64; 4] =
                        v.try_into().map_err(|_| Error::parse(origin, "weights need four entries"))?;
                    Ok(PreferenceWeights(arr))
                })
                .collect::<Result<_>>()?;
            Ok(TraceRecord {
                iteration: num(&r[0])?,
                avg_log_likelihood: r[1].parse().map_err(|_| Error::parse(origin, "bad log-likelihood"))?,
                num_constraints: num(&r[2])?,
                accepted,
                priors: split_f64(&r[4], ';', origin)?,
                weights,
            })
        })
        .collect()
}

pub fn save_trace(trace: &[TraceRecord], path: impl AsRef<Path>) -> Result<()> {
    trace_table(trace).save(path)
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    parse_trace(&Table::load(path)?, &path.display().to_string())
}

pub const REPORT_HEADER: [&str; 13] = [
    "method",
    "clusters",
    "seed",
    "cmse",
    "precision",
    "recall",
    "f1",
    "fpr",
    "avg_log_likelihood",
    "weight_error",
    "runtime_s",
    "num_constraints",
    "config_digest",
];

pub fn report_row(r: &ExperimentReport) -> Vec<String> {
    vec![
        r.method.clone(),
        r.clusters.to_string(),
        r.seed.to_string(),
        r.cmse.to_string(),
        r.precision.to_string(),
        r.recall.to_string(),
        r.f1.to_string(),
        r.fpr.to_string(),
        r.avg_log_likelihood.to_string(),
        join(&r.weight_error, ";"),
        r.runtime_s.to_string(),
        r.num_constraints.to_string(),
        r.config_digest.clone(),
    ]
}

/// Parses report columns out of a row of any table that contains them.
pub fn parse_report_row(table: &Table, row: &[String], origin: &str) -> Result<ExperimentReport> {
    let get = |name: &str| -> Result<&str> {
        let i = table.column(name).ok_or_else(|| Error::parse(origin, format!("missing column `{name}`")))?;
        Ok(row.get(i).map(String::as_str).unwrap_or(""))
    };
    let f = |name: &str| -> Result<f64> {
        let v = get(name)?;
        v.parse().map_err(|_| Error::parse(origin, format!("column `{name}`: not a number: {v:?}")))
    };
    let u = |name: &str| -> Result<u64> {
        let v = get(name)?;
        v.parse().map_err(|_| Error::parse(origin, format!("column `{name}`: not an integer: {v:?}")))
    };
    Ok(ExperimentReport {
        method: get("method")?.to_string(),
        clusters: u("clusters")? as usize,
        seed: u("seed")?,
        cmse: f("cmse")?,
        precision: f("precision")?,
        recall: f("recall")?,
        f1: f("f1")?,
        fpr: f("fpr")?,
        avg_log_likelihood: f("avg_log_likelihood")?,
        weight_error: split_f64(get("weight_error")?, ';', origin)?,
        runtime_s: f("runtime_s")?,
        num_constraints: u("num_constraints")? as usize,
        config_digest: get("config_digest")?.to_string(),
    })
}

/// Report table with the metric universes spelled out in the metadata.
pub fn reports_table(reports: &[ExperimentReport]) -> Table {
    let mut t = Table::new(&REPORT_HEADER)
        .with_meta("kind", "reports")
        .with_meta("cmse_universe", "all states")
        .with_meta("confusion_universe", "all states except start and goal");
    if let Some(d) = reports.first().map(|r| r.config_digest.clone()) {
        t = t.with_meta("config_digest", d);
    }
    t.rows = reports.iter().map(report_row).collect();
    t
}

pub fn load_reports(path: impl AsRef<Path>) -> Result<Vec<ExperimentReport>> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let t = Table::load(path)?;
    t.rows.iter().map(|r| parse_report_row(&t, r, &origin)).collect()
}
