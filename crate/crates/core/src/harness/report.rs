//! Method comparison tables built from finished runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::sweep::load_results;
use crate::error::{Error, Result};
use crate::files::{load_reports, Table};
use crate::metrics::ExperimentReport;

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub method: String,
    pub runs: usize,
    pub cmse_mean: f64,
    pub cmse_std: f64,
    pub runtime_mean_s: f64,
    /// Whether the method accepts demonstrations from several experts.
    pub trajectories: &'static str,
    pub learns_preferences: bool,
    pub note: &'static str,
}

fn traits(method: &str) -> (&'static str, bool) {
    match method.split(':').next().unwrap_or(method) {
        "moci" => ("heterogeneous", true),
        "single" => ("homogeneous", true),
        _ => ("homogeneous", false),
    }
}

/// One row per method name, in first-appearance order, followed by a
/// fixed literature row for ICRL, which this crate does not implement.
pub fn comparison_table(reports: &[ExperimentReport]) -> Vec<ComparisonRow> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&ExperimentReport>> = BTreeMap::new();
    for r in reports.iter().filter(|r| r.cmse.is_finite()) {
        if !groups.contains_key(r.method.as_str()) {
            order.push(r.method.as_str());
        }
        groups.entry(&r.method).or_default().push(r);
    }
    let mut rows: Vec<ComparisonRow> = order
        .into_iter()
        .map(|m| {
            let g = &groups[m];
            let n = g.len() as f64;
            let cmse_mean = g.iter().map(|r| r.cmse).sum::<f64>() / n;
            let cmse_std = (g.iter().map(|r| (r.cmse - cmse_mean).powi(2)).sum::<f64>() / n).sqrt();
            let (trajectories, learns_preferences) = traits(m);
            ComparisonRow {
                method: m.to_string(),
                runs: g.len(),
                cmse_mean,
                cmse_std,
                runtime_mean_s: g.iter().map(|r| r.runtime_s).sum::<f64>() / n,
                trajectories,
                learns_preferences,
                note: "measured",
            }
        })
        .collect();
    rows.push(ComparisonRow {
        method: "icrl".into(),
        runs: 0,
        cmse_mean: 0.36,
        cmse_std: f64::NAN,
        runtime_mean_s: 8.90,
        trajectories: "homogeneous",
        learns_preferences: false,
        note: "literature value, not reproduced",
    });
    rows
}

pub fn render_comparison(rows: &[ComparisonRow]) -> String {
    let mut s = String::from("| method | runs | CMSE | runtime (s) | trajectories | learns preferences | note |\n");
    s.push_str("|---|---|---|---|---|---|---|\n");
    for r in rows {
        let cmse = if r.cmse_std.is_nan() {
            format!("{:.3}", r.cmse_mean)
        } else {
            format!("{:.3} ± {:.3}", r.cmse_mean, r.cmse_std)
        };
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.2} | {} | {} | {} |",
            r.method,
            r.runs,
            cmse,
            r.runtime_mean_s,
            r.trajectories,
            if r.learns_preferences { "yes" } else { "no" },
            r.note
        );
    }
    s
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> Table {
    let mut t = Table::new(&[
        "method",
        "runs",
        "cmse_mean",
        "cmse_std",
        "runtime_mean_s",
        "trajectories",
        "learns_preferences",
        "note",
    ])
    .with_meta("kind", "comparison");
    t.rows = rows
        .iter()
        .map(|r| {
            vec![
                r.method.clone(),
                r.runs.to_string(),
                r.cmse_mean.to_string(),
                r.cmse_std.to_string(),
                r.runtime_mean_s.to_string(),
                r.trajectories.to_string(),
                r.learns_preferences.to_string(),
                r.note.to_string(),
            ]
        })
        .collect();
    t
}

/// Reports found in a run directory: a sweep's `results.csv`, or the
/// `reports.csv` written by a single inference.
pub fn collect_reports(dir: &Path) -> Result<Vec<ExperimentReport>> {
    let results = dir.join("results.csv");
    let reports = dir.join("reports.csv");
    let found = if results.exists() {
        load_results(&results)?.into_iter().filter(|r| r.error.is_none()).map(|r| r.report).collect()
    } else if reports.exists() {
        load_reports(&reports)?
    } else {
        return Err(Error::Usage(format!("{}: no results.csv or reports.csv to report on", dir.display())));
    };
    if found.is_empty() {
        return Err(Error::Usage(format!("{}: no successful runs to report on", dir.display())));
    }
    Ok(found)
}
