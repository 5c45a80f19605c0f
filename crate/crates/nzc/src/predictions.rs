// SPDX-License-Identifier: Apache-2.0

//! Teacher prediction and ground-truth files.
//!
//! Both are UTF-8 comma-separated text with a header row and one
//! newline-terminated record per line:
//!
//! ```text
//! query_id,teacher_id,label
//! 0,0,3
//! 0,1,3
//! ```
//!
//! ```text
//! query_id,label
//! 0,3
//! ```
//!
//! Every query must carry exactly one prediction from every teacher id that
//! appears anywhere in the file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nzc_core::ensemble::PredictionTable;

use crate::{Error, Result};

pub const PREDICTION_HEADER: &str = "query_id,teacher_id,label";
pub const TRUTH_HEADER: &str = "query_id,label";

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Numbered data lines after the expected header; blank lines are skipped.
fn records<'a>(
    path: &'a Path,
    text: &'a str,
    header: &str,
) -> Result<impl Iterator<Item = (usize, &'a str)> + 'a> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, h)) if h == header => {}
        Some((n, h)) => {
            return Err(Error::parse(path, n, format!("expected header `{header}`, found `{h}`")))
        }
        None => return Err(Error::parse(path, 1, format!("missing header `{header}`"))),
    }
    Ok(lines.filter(|(_, l)| !l.is_empty()))
}

fn fields<const N: usize>(path: &Path, line: usize, record: &str) -> Result<[u64; N]> {
    let parts: Vec<&str> = record.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(Error::parse(
            path,
            line,
            format!("expected {N} fields, found {}", parts.len()),
        ));
    }
    let mut out = [0u64; N];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| Error::parse(path, line, format!("`{part}` is not a non-negative integer")))?;
    }
    Ok(out)
}

fn check_label(path: &Path, line: usize, label: u64, classes: usize) -> Result<usize> {
    if label >= classes as u64 {
        Err(Error::parse(
            path,
            line,
            format!("label {label} out of range for {classes} classes"),
        ))
    } else {
        Ok(label as usize)
    }
}

/// Loads predictions and, optionally, ground truth for `classes` classes.
/// Queries are ordered by id and teachers by id.
pub fn load_predictions(
    predictions: &Path,
    truth: Option<&Path>,
    classes: usize,
) -> Result<PredictionTable> {
    if classes < 2 {
        return Err(nzc_core::Error::TooFewClasses(classes).into());
    }
    let text = read(predictions)?;
    // query -> (first line, teacher -> label)
    let mut by_query: BTreeMap<u64, (usize, BTreeMap<u64, usize>)> = BTreeMap::new();
    let mut teachers = BTreeSet::new();
    for (line, record) in records(predictions, &text, PREDICTION_HEADER)? {
        let [query, teacher, label] = fields::<3>(predictions, line, record)?;
        let label = check_label(predictions, line, label, classes)?;
        let (_, votes) = by_query.entry(query).or_insert_with(|| (line, BTreeMap::new()));
        if votes.insert(teacher, label).is_some() {
            return Err(Error::parse(
                predictions,
                line,
                format!("duplicate prediction for query {query}, teacher {teacher}"),
            ));
        }
        teachers.insert(teacher);
    }
    let mut ids = Vec::with_capacity(by_query.len());
    let mut rows = Vec::with_capacity(by_query.len());
    for (query, (first_line, votes)) in &by_query {
        if votes.len() != teachers.len() {
            let missing = teachers.iter().find(|t| !votes.contains_key(t)).expect("some teacher missing");
            return Err(Error::parse(
                predictions,
                *first_line,
                format!("query {query} has no prediction from teacher {missing}"),
            ));
        }
        ids.push(*query);
        rows.push(votes.values().copied().collect());
    }

    let mut truths = vec![None; ids.len()];
    if let Some(truth) = truth {
        let text = read(truth)?;
        let mut seen = BTreeSet::new();
        for (line, record) in records(truth, &text, TRUTH_HEADER)? {
            let [query, label] = fields::<2>(truth, line, record)?;
            let label = check_label(truth, line, label, classes)?;
            if !seen.insert(query) {
                return Err(Error::parse(truth, line, format!("duplicate label for query {query}")));
            }
            let index = ids
                .binary_search(&query)
                .map_err(|_| Error::parse(truth, line, format!("query {query} has no predictions")))?;
            truths[index] = Some(label);
        }
    }
    Ok(PredictionTable::new(classes, ids, rows, truths)?)
}

pub fn format_predictions(table: &PredictionTable) -> String {
    let mut out = String::from(PREDICTION_HEADER);
    out.push('\n');
    for (i, id) in table.query_ids().iter().enumerate() {
        for (teacher, label) in table.predictions(i).iter().enumerate() {
            writeln!(out, "{id},{teacher},{label}").expect("write to string");
        }
    }
    out
}

pub fn format_truth(table: &PredictionTable) -> String {
    let mut out = String::from(TRUTH_HEADER);
    out.push('\n');
    for (id, truth) in table.query_ids().iter().zip(table.truths()) {
        if let Some(label) = truth {
            writeln!(out, "{id},{label}").expect("write to string");
        }
    }
    out
}

pub fn write_predictions(table: &PredictionTable, predictions: &Path, truth: Option<&Path>) -> Result<()> {
    fs::write(predictions, format_predictions(table)).map_err(|e| Error::io(predictions, e))?;
    if let Some(truth) = truth {
        fs::write(truth, format_truth(table)).map_err(|e| Error::io(truth, e))?;
    }
    Ok(())
}
