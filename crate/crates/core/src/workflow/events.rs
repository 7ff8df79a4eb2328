//! Line-delimited event log records.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::SessionMetrics;
use crate::phy::{Direction, Scheme};

/// Protocol step within one session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    KnowledgeShare,
    ExtractPrompt,
    Uplink,
    Generate,
    SelectEncoder,
    Downlink,
    Calibrate,
}

/// One protocol step with the bits it put on air.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub session: u64,
    pub scheme: Scheme,
    pub step: Step,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    pub bits: usize,
    pub bit_errors: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl StepEvent {
    pub(crate) fn local(session: u64, scheme: Scheme, step: Step, note: impl Into<String>) -> Self {
        StepEvent {
            session,
            scheme,
            step,
            direction: None,
            bits: 0,
            bit_errors: 0,
            note: Some(note.into()),
        }
    }

    pub(crate) fn air(
        session: u64,
        scheme: Scheme,
        step: Step,
        direction: Direction,
        bits: usize,
        bit_errors: usize,
    ) -> Self {
        StepEvent {
            session,
            scheme,
            step,
            direction: Some(direction),
            bits,
            bit_errors,
            note: None,
        }
    }
}

/// Emitted after each `sync_update`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncEvent {
    pub epoch: u64,
    pub cached: usize,
    pub flushed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Step(StepEvent),
    Session(SessionMetrics),
    Sync(SyncEvent),
}

/// Writes one JSON object per line.
pub fn write_log<W: Write>(records: &[LogRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<event log>", e))?;
    }
    out.flush().map_err(|e| Error::io("<event log>", e))
}

pub fn read_log<R: BufRead>(input: R) -> Result<Vec<LogRecord>> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<event log>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Session summary records of a log, in log order.
pub fn session_metrics(records: &[LogRecord]) -> Vec<SessionMetrics> {
    records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Session(m) => Some(m.clone()),
            _ => None,
        })
        .collect()
}
