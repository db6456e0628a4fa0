//! Reading contingency tables, covariance matrices and samples.

use std::path::Path;

use collapse_core::model::{parse_count, DiscreteJoint, LevelOrders, TableRow};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
        .ok_or_else(|| CliError::parse(path, 1, format!("missing column {name:?}")))
}

/// Long-format table: header with `y`, `x`, `w` and `count` columns (any
/// order, case-insensitive), one row per cell. Repeated cells add up.
pub fn parse_table(bytes: &[u8], path: &Path, orders: &LevelOrders) -> Result<DiscreteJoint> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| CliError::parse(path, 1, e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(CliError::parse(path, 1, "empty input"));
    }
    let idx = [
        column(&headers, "y", path)?,
        column(&headers, "x", path)?,
        column(&headers, "w", path)?,
        column(&headers, "count", path)?,
    ];
    let mut rows = Vec::new();
    let mut lines: Vec<u64> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let count = parse_count(field(idx[3]))
            .ok_or_else(|| CliError::parse(path, line, format!("bad count {:?}", field(idx[3]))))?;
        lines.push(line);
        rows.push(TableRow {
            y: field(idx[0]).to_string(),
            x: field(idx[1]).to_string(),
            w: field(idx[2]).to_string(),
            count,
        });
    }
    if rows.is_empty() {
        return Err(CliError::parse(path, 1, "no data rows"));
    }
    DiscreteJoint::from_rows(&rows, orders).map_err(|e| match e {
        collapse_core::Error::NegativeCount { row, count } => {
            let line = lines.get(row.wrapping_sub(1)).copied().unwrap_or(0);
            CliError::parse(path, line, format!("negative count {count}"))
        }
        other => other.into(),
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Wrapped { covariance: [[f64; 3]; 3] },
    Bare([[f64; 3]; 3]),
}

/// Input to the Cochran command.
#[derive(Debug, Clone, PartialEq)]
pub enum CochranInput {
    Covariance([[f64; 3]; 3]),
    Sample(Vec<[f64; 3]>),
}

/// `.json` files hold a `(Y, X, W)` covariance matrix, bare or under a
/// `covariance` key; anything else is a CSV sample with `y`, `x`, `w` columns.
pub fn parse_cochran(bytes: &[u8], path: &Path) -> Result<CochranInput> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let m: MatrixFile = serde_json::from_slice(bytes)?;
        return Ok(CochranInput::Covariance(match m {
            MatrixFile::Wrapped { covariance } => covariance,
            MatrixFile::Bare(c) => c,
        }));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| CliError::parse(path, 1, e.to_string()))?
        .clone();
    let idx = [column(&headers, "y", path)?, column(&headers, "x", path)?, column(&headers, "w", path)?];
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::parse(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = [0.0; 3];
        for (k, &i) in idx.iter().enumerate() {
            let text = record.get(i).unwrap_or("");
            row[k] = text
                .parse()
                .map_err(|_| CliError::parse(path, line, format!("bad number {text:?}")))?;
        }
        rows.push(row);
    }
    Ok(CochranInput::Sample(rows))
}
