//! Cartesian sweeps with per-cell checkpoints.
//!
//! Every cell (grid size, horizon rule, demonstration count, threshold,
//! seed) runs all requested methods on one dataset and is written to
//! `cells/<key>.csv` as soon as it finishes. A rerun with the same spec
//! reuses finished cells, so an interrupted sweep resumes where it stopped.
//! Method failures are recorded in the `error` column instead of aborting
//! the sweep.
//!
//! Random terrain is drawn from the cell seed; demonstrations and the
//! inference initialization use the same seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::run::{config_digest, run_method, MethodRun};
use super::{ExperimentSpec, Method};
use crate::demos::generate_demos;
use crate::error::{Error, Result};
use crate::files::{parse_report_row, report_row, Table, REPORT_HEADER};
use crate::inference::InferenceConfig;
use crate::metrics::ExperimentReport;
use crate::presets::HorizonRule;

/// Sweep coordinates that precede the report columns in every row.
pub const CELL_HEADER: [&str; 4] = ["grid_size", "horizon_rule", "demo_count", "threshold"];

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    /// `None` keeps the environment's own size.
    pub grid_size: Option<usize>,
    pub horizon: HorizonRule,
    pub demo_count: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Cell {
    pub fn key(&self) -> String {
        let n = self.grid_size.map_or("env".to_string(), |n| format!("n{n}"));
        format!("{n}-h{}-d{}-t{}-s{}", self.horizon, self.demo_count, self.threshold, self.seed)
    }
}

/// One result row: the cell, the realized grid size, and a report or the
/// reason the method failed.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub grid_size: usize,
    pub horizon: HorizonRule,
    pub demo_count: usize,
    pub threshold: f64,
    pub report: ExperimentReport,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub computed: usize,
    pub reused: usize,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

fn header() -> Vec<&'static str> {
    CELL_HEADER.iter().chain(REPORT_HEADER.iter()).chain(["error"].iter()).copied().collect()
}

fn row_to_strings(r: &SweepRow) -> Vec<String> {
    let mut v = vec![
        r.grid_size.to_string(),
        r.horizon.to_string(),
        r.demo_count.to_string(),
        r.threshold.to_string(),
    ];
    v.extend(report_row(&r.report));
    v.push(r.error.clone().unwrap_or_default());
    v
}

fn rows_table(rows: &[SweepRow], digest: &str) -> Table {
    let mut t = Table::new(&header()).with_meta("kind", "sweep").with_meta("config_digest", digest);
    t.rows = rows.iter().map(row_to_strings).collect();
    t
}

fn parse_rows(t: &Table, origin: &str) -> Result<Vec<SweepRow>> {
    let col = |name: &str| t.column(name).ok_or_else(|| Error::parse(origin, format!("missing column `{name}`")));
    let (g, h, d, th, e) = (col("grid_size")?, col("horizon_rule")?, col("demo_count")?, col("threshold")?, col("error")?);
    let bad = |what: &str| Error::parse(origin, format!("column `{what}`: malformed value"));
    t.rows
        .iter()
        .map(|row| {
            let cell = |i: usize| row.get(i).map(String::as_str).unwrap_or("");
            Ok(SweepRow {
                grid_size: cell(g).parse().map_err(|_| bad("grid_size"))?,
                horizon: cell(h).parse().map_err(|_| bad("horizon_rule"))?,
                demo_count: cell(d).parse().map_err(|_| bad("demo_count"))?,
                threshold: cell(th).parse().map_err(|_| bad("threshold"))?,
                report: parse_report_row(t, row, origin)?,
                error: Some(cell(e).to_string()).filter(|s| !s.is_empty()),
            })
        })
        .collect()
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<SweepRow>> {
    let path = path.as_ref();
    parse_rows(&Table::load(path)?, &path.display().to_string())
}

/// Digest of everything except the sweep axes and output location, so
/// extending an axis keeps already finished cells valid.
fn sweep_digest(spec: &ExperimentSpec) -> String {
    let core = ExperimentSpec { sweep: None, outputs: None, ..spec.clone() };
    config_digest(&core.render())
}

fn cells(spec: &ExperimentSpec, base_seed: u64) -> (Vec<Cell>, Vec<Method>) {
    let axes = spec.sweep.clone().unwrap_or_default();
    let grid: Vec<Option<usize>> = axes.grid_sizes.clone().map_or(vec![None], |v| v.into_iter().map(Some).collect());
    let horizons = axes.horizons.clone().unwrap_or_else(|| vec![spec.env.horizon.unwrap_or_default()]);
    let demos = axes
        .demo_counts
        .clone()
        .unwrap_or_else(|| vec![spec.experts.iter().map(|e| e.count).sum()]);
    let thresholds = axes.thresholds.clone().unwrap_or_else(|| vec![spec.inference.config.threshold]);
    let seeds = axes.seed_list(base_seed);
    let methods = axes.methods.clone().unwrap_or_else(|| vec![Method::Moci, Method::Single, Method::Mlci]);
    let mut out = Vec::new();
    for &grid_size in &grid {
        for &horizon in &horizons {
            for &demo_count in &demos {
                for &threshold in &thresholds {
                    for &seed in &seeds {
                        out.push(Cell { grid_size, horizon, demo_count, threshold, seed });
                    }
                }
            }
        }
    }
    (out, methods)
}

fn failed_row(cell: &Cell, grid_size: usize, method: &str, k: usize, digest: &str, e: &Error) -> SweepRow {
    SweepRow {
        grid_size,
        horizon: cell.horizon,
        demo_count: cell.demo_count,
        threshold: cell.threshold,
        report: ExperimentReport {
            method: method.to_string(),
            clusters: k,
            seed: cell.seed,
            cmse: f64::NAN,
            precision: f64::NAN,
            recall: f64::NAN,
            f1: f64::NAN,
            fpr: f64::NAN,
            avg_log_likelihood: f64::NAN,
            weight_error: vec![],
            runtime_s: f64::NAN,
            num_constraints: 0,
            config_digest: digest.to_string(),
        },
        error: Some(e.to_string().replace(['\n', '\r'], " ")),
    }
}

/// Runs one cell. Environment or data failures mark every method failed.
pub fn run_cell(spec: &ExperimentSpec, cell: &Cell, methods: &[Method], digest: &str) -> Vec<SweepRow> {
    let fail_all = |n: usize, e: &Error| -> Vec<SweepRow> {
        methods.iter().map(|m| failed_row(cell, n, m.name(), spec.inference.k, digest, e)).collect()
    };
    let env = match spec.env.build(cell.grid_size, Some(cell.horizon), cell.seed) {
        Ok(env) => env,
        Err(e) => return fail_all(cell.grid_size.unwrap_or(0), &e),
    };
    let experts = spec.experts_with_total(cell.demo_count);
    let data = match generate_demos(&env, &experts, cell.seed, spec.step_penalty) {
        Ok(d) => d,
        Err(e) => return fail_all(env.n(), &e),
    };
    let cfg = InferenceConfig { threshold: cell.threshold, seed: cell.seed, ..spec.inference.config.clone() };
    let mut rows = Vec::new();
    for &method in methods {
        let k = if method == Method::Moci { spec.inference.k } else { 1 };
        let run = MethodRun { method, k, config: &cfg, seed: cell.seed, digest };
        match run_method(&env, &data.trajectories, &experts, &run) {
            Ok(outs) => rows.extend(outs.into_iter().map(|o| SweepRow {
                grid_size: env.n(),
                horizon: cell.horizon,
                demo_count: cell.demo_count,
                threshold: cell.threshold,
                report: o.report,
                error: None,
            })),
            Err(e) => rows.push(failed_row(cell, env.n(), method.name(), k, digest, &e)),
        }
    }
    rows
}

fn write_atomic(table: &Table, path: &Path) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    table.save(&tmp)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn try_reuse(path: &Path, digest: &str) -> Option<Vec<SweepRow>> {
    let t = Table::load(path).ok()?;
    if t.meta.get("config_digest").map(String::as_str) != Some(digest) {
        return None;
    }
    parse_rows(&t, &path.display().to_string()).ok()
}

/// Runs (or resumes) a sweep into `out`, writing `results.csv` and the
/// aggregate tables. `progress` is called once per finished cell.
pub fn run_sweep(
    spec: &ExperimentSpec,
    out: &Path,
    base_seed: u64,
    jobs: usize,
    progress: &(dyn Fn(&str, bool) + Sync),
) -> Result<SweepOutcome> {
    spec.validate()?;
    let digest = sweep_digest(spec);
    let (cells, methods) = cells(spec, base_seed);
    let cell_dir: PathBuf = out.join("cells");
    fs::create_dir_all(&cell_dir).map_err(|e| Error::io(&cell_dir, e))?;
    fs::write(out.join("spec.toml"), spec.render()).map_err(|e| Error::io(out.join("spec.toml"), e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let results: Vec<Result<(Vec<SweepRow>, bool)>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let path = cell_dir.join(format!("{}.csv", cell.key()));
                if let Some(rows) = try_reuse(&path, &digest) {
                    progress(&cell.key(), true);
                    return Ok((rows, true));
                }
                let rows = run_cell(spec, cell, &methods, &digest);
                write_atomic(&rows_table(&rows, &digest), &path)?;
                progress(&cell.key(), false);
                Ok((rows, false))
            })
            .collect()
    });

    let mut outcome = SweepOutcome { rows: vec![], computed: 0, reused: 0 };
    for r in results {
        let (rows, reused) = r?;
        if reused {
            outcome.reused += 1;
        } else {
            outcome.computed += 1;
        }
        outcome.rows.extend(rows);
    }
    write_atomic(&rows_table(&outcome.rows, &digest), &out.join("results.csv"))?;
    for (name, table) in aggregate(&outcome.rows, &digest) {
        write_atomic(&table, &out.join(name))?;
    }
    Ok(outcome)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
    (m, var.sqrt())
}

type Metric = (&'static str, fn(&SweepRow) -> f64);
type Key = (&'static str, fn(&SweepRow) -> String);

const METRICS: [Metric; 7] = [
    ("avg_log_likelihood", |r| r.report.avg_log_likelihood),
    ("cmse", |r| r.report.cmse),
    ("precision", |r| r.report.precision),
    ("recall", |r| r.report.recall),
    ("f1", |r| r.report.f1),
    ("fpr", |r| r.report.fpr),
    ("runtime_s", |r| r.report.runtime_s),
];

fn metric(name: &str) -> Metric {
    *METRICS.iter().find(|m| m.0 == name).expect("known metric")
}

const K_METHOD: Key = ("method", |r| r.report.method.clone());
const K_GRID: Key = ("grid_size", |r| r.grid_size.to_string());
const K_HORIZON: Key = ("horizon_rule", |r| r.horizon.to_string());
const K_DEMOS: Key = ("demo_count", |r| r.demo_count.to_string());
const K_THRESHOLD: Key = ("threshold", |r| r.threshold.to_string());

/// Mean and population standard deviation of `metrics`, grouped by `keys`,
/// over successful rows. Groups are ordered by first appearance.
pub fn group_table(rows: &[SweepRow], keys: &[Key], metrics: &[Metric], digest: &str) -> Table {
    let mut header: Vec<String> = keys.iter().map(|k| k.0.to_string()).collect();
    header.push("runs".into());
    header.push("failures".into());
    for m in metrics {
        header.push(format!("{}_mean", m.0));
        header.push(format!("{}_std", m.0));
    }
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut groups: BTreeMap<Vec<String>, Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        let key: Vec<String> = keys.iter().map(|k| (k.1)(r)).collect();
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&header_refs).with_meta("kind", "aggregate").with_meta("config_digest", digest);
    for key in order {
        let members = &groups[&key];
        let ok: Vec<&&SweepRow> = members.iter().filter(|r| r.error.is_none()).collect();
        let mut row = key.clone();
        row.push(members.len().to_string());
        row.push((members.len() - ok.len()).to_string());
        for m in metrics {
            let xs: Vec<f64> = ok.iter().map(|r| (m.1)(r)).collect();
            let (mean, std) = mean_std(&xs);
            row.push(mean.to_string());
            row.push(std.to_string());
        }
        t.rows.push(row);
    }
    t
}

/// The standard aggregate tables, keyed by file name.
pub fn aggregate(rows: &[SweepRow], digest: &str) -> Vec<(&'static str, Table)> {
    let fpr = [metric("fpr")];
    vec![
        ("summary.csv", group_table(rows, &[K_METHOD, K_GRID, K_HORIZON, K_DEMOS, K_THRESHOLD], &METRICS, digest)),
        ("fpr_vs_demos.csv", group_table(rows, &[K_METHOD, K_DEMOS], &fpr, digest)),
        ("fpr_vs_grid.csv", group_table(rows, &[K_METHOD, K_GRID], &fpr, digest)),
        ("runtime_vs_grid.csv", group_table(rows, &[K_METHOD, K_GRID, K_HORIZON], &[metric("runtime_s")], digest)),
        ("ablation.csv", group_table(rows, &[K_METHOD], &METRICS[..6], digest)),
    ]
}
