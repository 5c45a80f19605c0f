// SPDX-License-Identifier: Apache-2.0

//! Report files written by `nzc run`.
//!
//! An output directory holds `summary.json` (configuration echo,
//! accuracies, qualified fractions, privacy budget), `queries.csv` (one row
//! per answered query) and `ledger.txt` (see [`crate::ledger_file`]).
//! Field order is fixed and reals are rounded to 12 significant digits, so
//! a given seed always yields the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ledger_file::write_ledger;
use crate::number::{parse_real, sig12, Real};
use crate::pipeline::ExperimentRun;
use crate::{Error, Result};

pub const SUMMARY_FILE: &str = "summary.json";
pub const QUERIES_FILE: &str = "queries.csv";
pub const LEDGER_FILE: &str = "ledger.txt";
pub const QUERIES_HEADER: &str =
    "query_id,truth,clean_label,returned_label,gap,flip_distance,sensitivity,parameter";

/// Configuration as it was run, after defaults and derivations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    /// `synthetic` or `files`.
    pub source: String,
    pub teachers: u64,
    pub teacher_accuracy: Option<Real>,
    pub predictions: Option<String>,
    pub truth: Option<String>,
    pub classes: usize,
    pub mechanism: String,
    pub c: Real,
    pub gamma: Option<Real>,
    pub scale: Option<Real>,
    pub sigma: Option<Real>,
    pub beta: Option<Real>,
    pub tau: Option<Real>,
    pub delta: Real,
    pub seed: u64,
    pub max_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostSummary {
    /// Boost giving flip probability `tau` on distance-qualified queries.
    pub required_c: Option<Real>,
    pub meets_tau: Option<bool>,
    /// Queries needing at least three vote moves to change the plurality;
    /// their smooth sensitivity takes the small branch.
    pub qualified_queries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    /// Queries with a known ground-truth label.
    pub labelled_queries: u64,
    /// Percent, noiseless plurality vs truth.
    pub clean: Real,
    /// Percent, mechanism output vs truth.
    pub mechanism: Real,
    /// Percent, mechanism output vs noiseless plurality (all queries).
    pub agreement: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualifiedPoint {
    pub n: u64,
    pub fraction: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacySummary {
    pub delta: Real,
    pub laplace_queries: u64,
    pub gaussian_queries: u64,
    /// Moments accountant over all Laplace queries.
    pub moments_epsilon: Option<Real>,
    pub simple_epsilon: Option<Real>,
    pub advanced_epsilon: Option<Real>,
    pub max_gamma: Option<Real>,
    /// Classical bound summed over Gaussian queries; `null` when some query
    /// falls outside its range.
    pub gaussian_epsilon: Option<Real>,
    pub gaussian_delta: Option<Real>,
    pub gaussian_bound_applicable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ConfigEcho,
    pub queries: u64,
    pub boost: BoostSummary,
    pub accuracy: Option<AccuracySummary>,
    pub qualified: Vec<QualifiedPoint>,
    pub privacy: PrivacySummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRow {
    pub query_id: u64,
    pub truth: Option<usize>,
    pub clean_label: usize,
    pub returned_label: usize,
    pub gap: u64,
    pub flip_distance: u64,
    pub sensitivity: Real,
    /// `γ` for Laplace queries, `σ` for Gaussian ones.
    pub parameter: Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub summary: Summary,
    pub queries: Vec<QueryRow>,
}

pub fn format_summary(summary: &Summary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

pub fn format_queries(rows: &[QueryRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(QUERIES_HEADER);
    out.push('\n');
    for r in rows {
        let truth = r.truth.map(|t| t.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{truth},{},{},{},{},{},{}",
            r.query_id,
            r.clean_label,
            r.returned_label,
            r.gap,
            r.flip_distance,
            sig12(r.sensitivity.get()),
            sig12(r.parameter.get()),
        )
        .expect("write to string");
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the summary, per-query table and ledger into `dir`, creating it
/// if needed.
pub fn emit_report(run: &ExperimentRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join(SUMMARY_FILE), &format_summary(&run.report.summary))?;
    write(&dir.join(QUERIES_FILE), &format_queries(&run.report.queries))?;
    write_ledger(&run.ledger, &dir.join(LEDGER_FILE))
}

fn parse_queries(path: &Path, text: &str) -> Result<Vec<QueryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == QUERIES_HEADER => {}
        _ => return Err(Error::parse(path, 1, format!("expected header `{QUERIES_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 8 {
            return Err(Error::parse(path, n, format!("expected 8 fields, found {}", f.len())));
        }
        let int = |k: usize| -> Result<u64> {
            f[k].parse()
                .map_err(|_| Error::parse(path, n, format!("bad integer `{}`", f[k])))
        };
        let real = |k: usize| -> Result<Real> {
            parse_real(f[k])
                .map(Real::new)
                .ok_or_else(|| Error::parse(path, n, format!("bad number `{}`", f[k])))
        };
        rows.push(QueryRow {
            query_id: int(0)?,
            truth: if f[1].is_empty() { None } else { Some(int(1)? as usize) },
            clean_label: int(2)? as usize,
            returned_label: int(3)? as usize,
            gap: int(4)?,
            flip_distance: int(5)?,
            sensitivity: real(6)?,
            parameter: real(7)?,
        });
    }
    Ok(rows)
}

/// Reads back what [`emit_report`] wrote (the ledger is read separately
/// with [`crate::ledger_file::read_ledger`]).
pub fn read_report(dir: &Path) -> Result<ExperimentReport> {
    let summary_path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&summary_path).map_err(|e| Error::io(&summary_path, e))?;
    let summary = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: summary_path.clone(),
        source,
    })?;
    let queries_path = dir.join(QUERIES_FILE);
    let text = fs::read_to_string(&queries_path).map_err(|e| Error::io(&queries_path, e))?;
    Ok(ExperimentReport {
        summary,
        queries: parse_queries(&queries_path, &text)?,
    })
}
