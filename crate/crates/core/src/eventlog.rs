//! The append-only exercise log and its JSON-lines form.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Microblog, MicroblogError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// A plan message reached its emit time.
    Emitted,
    Posted,
    Retweeted,
    Injected,
    GhostRetweet,
}

impl EventKind {
    /// Kinds produced by exercise participants rather than the plan or ghosts.
    pub fn is_participant(&self) -> bool {
        matches!(self, Self::Posted | Self::Retweeted | Self::Injected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogEntry {
    pub seq: u64,
    /// Unix milliseconds at which the entry was appended.
    pub wall_time: u64,
    pub scenario_time: f64,
    pub kind: EventKind,
    pub message: Microblog,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: seq {seq} breaks the gapless sequence (expected {expected})")]
    Gap { line: usize, seq: u64, expected: u64 },
    #[error("line {line}: {source}")]
    Message { line: usize, source: MicroblogError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_entry<W: Write>(mut out: W, entry: &EventLogEntry) -> io::Result<()> {
    serde_json::to_writer(&mut out, entry)?;
    out.write_all(b"\n")
}

/// Reads a log and checks that seq runs 1, 2, 3, ... without gaps.
pub fn read_log<R: BufRead>(input: R) -> Result<Vec<EventLogEntry>, LogError> {
    let mut out: Vec<EventLogEntry> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let entry: EventLogEntry =
            serde_json::from_str(&line).map_err(|e| LogError::Line { line: line_no, message: e.to_string() })?;
        let expected = out.len() as u64 + 1;
        if entry.seq != expected {
            return Err(LogError::Gap { line: line_no, seq: entry.seq, expected });
        }
        entry.message.validate().map_err(|source| LogError::Message { line: line_no, source })?;
        out.push(entry);
    }
    Ok(out)
}

pub fn parse_log(text: &str) -> Result<Vec<EventLogEntry>, LogError> {
    read_log(text.as_bytes())
}

/// The log as JSON lines with every `wall_time` zeroed, for replay comparisons.
pub fn without_wall_time(entries: &[EventLogEntry]) -> String {
    let mut out = Vec::new();
    for e in entries {
        write_entry(&mut out, &EventLogEntry { wall_time: 0, ..e.clone() }).expect("in-memory write");
    }
    String::from_utf8(out).expect("json is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{MicroblogDraft, SourceClass, VisibilityLevel};

    fn entry(seq: u64) -> EventLogEntry {
        let d = MicroblogDraft::new("hello #x", VisibilityLevel::Low, SourceClass::Background);
        EventLogEntry {
            seq,
            wall_time: 1_700_000_000_000 + seq,
            scenario_time: seq as f64,
            kind: EventKind::Emitted,
            message: Microblog::from_draft(seq, seq as f64, "a", d).unwrap(),
        }
    }

    #[test]
    fn round_trip_and_gap_detection() {
        let mut buf = Vec::new();
        for s in 1..=3 {
            write_entry(&mut buf, &entry(s)).unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        let back = parse_log(&text).unwrap();
        assert_eq!(back, vec![entry(1), entry(2), entry(3)]);

        let mut gappy = Vec::new();
        write_entry(&mut gappy, &entry(1)).unwrap();
        write_entry(&mut gappy, &entry(3)).unwrap();
        assert!(matches!(read_log(&gappy[..]), Err(LogError::Gap { line: 2, seq: 3, expected: 2 })));
        assert!(parse_log("").unwrap().is_empty());
    }

    #[test]
    fn wall_time_stripped() {
        let a = without_wall_time(&[entry(1)]);
        let mut e = entry(1);
        e.wall_time = 5;
        assert_eq!(a, without_wall_time(&[e]));
        assert!(a.contains("\"kind\":\"emitted\""));
    }
}
