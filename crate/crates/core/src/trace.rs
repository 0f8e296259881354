//! Trace (JSON Lines) and report (JSON) file formats.
//!
//! A trace file starts with one header line followed by one line per
//! proposed candidate. Candidate bitsets use [`Candidate::to_hex`]; the
//! header's `universe_size` is needed to decode them.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::candidate::Candidate;
use crate::engine::{Mode, Phase, ReductionResult, TraceDecision, TraceEvent};
use crate::model::{MonoVerdict, PRNG_ID};
use crate::oracle::Verdict;

pub const TRACE_FORMAT: &str = "monored-trace/1";

pub const TRACE_FIELDS: [&str; 11] = [
    "index",
    "granularity",
    "phase",
    "decision",
    "draw",
    "confidence_before",
    "outcome",
    "verdict",
    "m_after",
    "candidate_hex",
    "cardinality",
];

pub const REPORT_FIELDS: [&str; 9] = [
    "original_tokens",
    "reduced_tokens",
    "executed_tests",
    "skipped_tests",
    "wall_seconds",
    "tokens_per_second",
    "mode",
    "seed",
    "truncated",
];

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: String,
    pub tool_version: String,
    pub mode: Mode,
    pub seed: u64,
    pub prng: String,
    pub replay: bool,
    pub universe_size: usize,
}

impl TraceHeader {
    pub fn new(mode: Mode, seed: u64, replay: bool, universe_size: usize) -> Self {
        Self {
            format: TRACE_FORMAT.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            mode,
            seed,
            prng: PRNG_ID.to_owned(),
            replay,
            universe_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub index: u64,
    pub granularity: usize,
    pub phase: Phase,
    pub decision: TraceDecision,
    pub draw: Option<f64>,
    pub confidence_before: f64,
    pub outcome: Option<Verdict>,
    pub verdict: Option<MonoVerdict>,
    pub m_after: i64,
    pub candidate_hex: String,
    pub cardinality: usize,
}

impl From<&TraceEvent> for TraceRecord {
    fn from(e: &TraceEvent) -> Self {
        Self {
            index: e.index,
            granularity: e.granularity,
            phase: e.phase,
            decision: e.decision,
            draw: e.draw,
            confidence_before: e.confidence_before,
            outcome: e.outcome,
            verdict: e.verdict,
            m_after: e.m_after,
            candidate_hex: e.candidate.to_hex(),
            cardinality: e.candidate.cardinality(),
        }
    }
}

pub fn write_trace<W: Write>(
    mut out: W,
    header: &TraceHeader,
    events: &[TraceEvent],
) -> Result<(), FormatError> {
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    for e in events {
        serde_json::to_writer(&mut out, &TraceRecord::from(e))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn check_keys(value: &Value, expected: &[&str], line: usize) -> Result<(), FormatError> {
    let obj = value.as_object().ok_or_else(|| FormatError::Schema {
        line,
        message: "not a JSON object".into(),
    })?;
    let got: BTreeSet<&str> = obj.keys().map(String::as_str).collect();
    let want: BTreeSet<&str> = expected.iter().copied().collect();
    if got != want {
        return Err(FormatError::Schema {
            line,
            message: format!("fields {got:?}, expected {want:?}"),
        });
    }
    Ok(())
}

fn schema(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Schema {
        line,
        message: message.into(),
    }
}

/// Parses and validates a trace: exact field sets, consecutive indices,
/// decodable bitsets with matching cardinality, and the
/// skipped/executed field rules.
pub fn read_trace<R: BufRead>(input: R) -> Result<(TraceHeader, Vec<TraceRecord>), FormatError> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| schema(1, "missing header"))??;
    let header: TraceHeader = serde_json::from_str(&first)?;
    if header.format != TRACE_FORMAT {
        return Err(schema(1, format!("unknown format `{}`", header.format)));
    }
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line?;
        let value: Value = serde_json::from_str(&line)?;
        check_keys(&value, &TRACE_FIELDS, lineno)?;
        let rec: TraceRecord = serde_json::from_value(value)?;
        if rec.index != records.len() as u64 + 1 {
            return Err(schema(lineno, format!("index {} out of sequence", rec.index)));
        }
        let cand = Candidate::from_hex(header.universe_size, &rec.candidate_hex)
            .ok_or_else(|| schema(lineno, "undecodable candidate_hex"))?;
        if cand.cardinality() != rec.cardinality {
            return Err(schema(lineno, "cardinality does not match candidate_hex"));
        }
        match rec.decision {
            TraceDecision::Skipped => {
                if rec.outcome.is_some() || rec.verdict.is_some() || rec.draw.is_none() {
                    return Err(schema(lineno, "skipped event needs a draw and no outcome"));
                }
            }
            TraceDecision::Executed => {
                if rec.outcome.is_none() {
                    return Err(schema(lineno, "executed event without outcome"));
                }
            }
        }
        records.push(rec);
    }
    Ok((header, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub original_tokens: u64,
    pub reduced_tokens: u64,
    pub executed_tests: u64,
    pub skipped_tests: u64,
    pub wall_seconds: f64,
    pub tokens_per_second: f64,
    pub mode: Mode,
    pub seed: u64,
    pub truncated: bool,
}

impl Report {
    pub fn from_result(result: &ReductionResult, mode: Mode, seed: u64) -> Self {
        let m = &result.metrics;
        Self {
            original_tokens: m.original_tokens,
            reduced_tokens: m.reduced_tokens,
            executed_tests: m.executed_tests,
            skipped_tests: m.skipped_tests,
            wall_seconds: m.wall_seconds,
            tokens_per_second: m.deletion_rate,
            mode,
            seed,
            truncated: result.truncated,
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<(), FormatError> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    /// Parses a report and checks the exact field set.
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let value: Value = serde_json::from_str(text)?;
        check_keys(&value, &REPORT_FIELDS, 1)?;
        Ok(serde_json::from_value(value)?)
    }
}

/// Reads replay draws: one decimal per line, blank lines and `#` comments
/// ignored.
pub fn parse_draws(text: &str) -> Result<Vec<f64>, FormatError> {
    let mut draws = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let u: f64 = line
            .parse()
            .map_err(|_| schema(k + 1, format!("`{line}` is not a number")))?;
        if !(u > 0.0 && u < 1.0) {
            return Err(schema(k + 1, format!("draw {u} outside (0, 1)")));
        }
        draws.push(u);
    }
    Ok(draws)
}
