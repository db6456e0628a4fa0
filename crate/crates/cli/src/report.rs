//! Versioned JSON report and its CSV summary.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const SCHEMA: &str = "collapse-kit/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    /// SHA-256 of the input bytes; empty for generated batches.
    pub sha256: String,
    pub bytes: usize,
    /// Axis sizes, e.g. `{"Y": 2, "X": 2, "W": 2}`.
    pub dims: BTreeMap<String, usize>,
    pub description: String,
}

impl Fingerprint {
    pub fn of(bytes: &[u8], dims: BTreeMap<String, usize>, description: impl Into<String>) -> Self {
        Fingerprint {
            sha256: format!("{:x}", Sha256::digest(bytes)),
            bytes: bytes.len(),
            dims,
            description: description.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Input,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckError {
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: String,
    /// How the numbers were obtained, e.g. `exact-rational` or
    /// `quadrature+finite-difference`.
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<CheckError>,
}

impl CheckOutcome {
    /// `holds` of the verdict in the result, wherever it sits.
    pub fn holds(&self) -> Option<bool> {
        holds_of(self.result.as_ref()?)
    }

    fn max_violation(&self) -> Option<f64> {
        let r = self.result.as_ref()?;
        r.get("max_violation")
            .or_else(|| r.get("verdict").and_then(|v| v.get("max_violation")))
            .and_then(Value::as_f64)
    }

    fn points(&self) -> Option<u64> {
        let r = self.result.as_ref()?;
        r.get("points")
            .or_else(|| r.get("verdict").and_then(|v| v.get("points")))
            .or_else(|| r.get("checked"))
            .and_then(Value::as_u64)
    }
}

fn holds_of(r: &Value) -> Option<bool> {
    if let Some(items) = r.as_array() {
        return items.iter().map(holds_of).collect::<Option<Vec<bool>>>().map(|v| v.iter().all(|&h| h));
    }
    if r.get("membership").is_some() {
        // Condition reports hold unless a direction is violated.
        return Some(["sufficiency", "necessity"].iter().all(|k| r.get(*k).and_then(Value::as_str) != Some("violated")));
    }
    if let Some(status) = r.get("status").and_then(Value::as_str) {
        return Some(status != "violated");
    }
    r.get("holds")
        .or_else(|| r.get("verdict").and_then(|v| v.get("holds")))
        .and_then(Value::as_bool)
        .or_else(|| r.get("failures").and_then(Value::as_u64).map(|f| f == 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
    pub checks_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub tool_version: String,
    pub command: String,
    pub input: Fingerprint,
    pub config: RunConfig,
    pub checks: Vec<CheckOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields: Option<Value>,
    pub timing: Timing,
}

impl Report {
    pub(crate) fn new(command: &str, input: Fingerprint, config: RunConfig) -> Self {
        Report {
            schema: SCHEMA.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            input,
            config,
            checks: Vec::new(),
            fields: None,
            timing: Timing {
                total_ms: 0.0,
                checks_ms: BTreeMap::new(),
            },
        }
    }

    /// Runs one check, recording its result or error and its wall time.
    pub(crate) fn run<T: Serialize>(
        &mut self,
        check: &str,
        method: &str,
        tolerance: Option<f64>,
        f: impl FnOnce() -> collapse_core::Result<T>,
    ) {
        let start = Instant::now();
        let outcome = f();
        self.timing
            .checks_ms
            .insert(check.to_string(), start.elapsed().as_secs_f64() * 1e3);
        let (result, error) = match outcome.map(|v| serde_json::to_value(v)) {
            Ok(Ok(v)) => (Some(v), None),
            Ok(Err(e)) => (
                None,
                Some(CheckError {
                    kind: ErrorKind::Input,
                    message: e.to_string(),
                }),
            ),
            Err(e) => (
                None,
                Some(CheckError {
                    kind: if e.is_numerical() { ErrorKind::Numerical } else { ErrorKind::Input },
                    message: e.to_string(),
                }),
            ),
        };
        self.checks.push(CheckOutcome {
            check: check.to_string(),
            method: method.to_string(),
            tolerance,
            result,
            error,
        });
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.check == name)
    }

    /// 0 when every check ran, 2 if any hit a numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        let kinds: Vec<ErrorKind> = self.checks.iter().filter_map(|c| c.error.as_ref().map(|e| e.kind)).collect();
        if kinds.contains(&ErrorKind::Numerical) {
            2
        } else if kinds.is_empty() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per check: `check,status,holds,max_violation,tolerance,points,error`.
    pub fn to_csv_summary(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "status", "holds", "max_violation", "tolerance", "points", "error"])
            .expect("in-memory write");
        let opt = |v: Option<String>| v.unwrap_or_default();
        for c in &self.checks {
            let status = if c.error.is_some() { "error" } else { "ok" };
            w.write_record([
                c.check.clone(),
                status.to_string(),
                opt(c.holds().map(|h| h.to_string())),
                opt(c.max_violation().map(|v| format!("{v:e}"))),
                opt(c.tolerance.map(|v| format!("{v:e}"))),
                opt(c.points().map(|v| v.to_string())),
                opt(c.error.as_ref().map(|e| e.message.clone())),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
    }
}
