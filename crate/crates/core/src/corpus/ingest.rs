//! Background corpus ingestion: newline-delimited JSON records filtered to a region.
//!
//! Each line is `{"ts": <int seconds>, "user": "...", "text": "...", "lat"?: f, "lon"?: f}`.
//! Bad lines are rejected individually with their 1-based line number; the rest of the
//! file is still read.

use serde::{Deserialize, Serialize};

use super::geo::{BoundingBox, GeoPoint};
use super::text;
use super::types::{validate_handle, Microblog, SourceClass, VisibilityLevel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub ts: i64,
    pub user: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
}

impl RawRecord {
    fn geo(&self) -> Result<Option<GeoPoint>, String> {
        match (self.lat, self.lon) {
            (None, None) => Ok(None),
            (Some(lat), Some(lon)) => GeoPoint::new(lat, lon).map(Some).map_err(|e| e.to_string()),
            _ => Err("lat and lon must be given together".into()),
        }
    }
}

impl From<&Microblog> for RawRecord {
    fn from(m: &Microblog) -> Self {
        RawRecord {
            ts: m.scenario_time as i64,
            user: m.author.clone(),
            text: m.text.clone(),
            lat: m.geo.map(|g| g.lat()),
            lon: m.geo.map(|g| g.lon()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestOptions {
    /// Keep records that carry no coordinates. Off by default.
    pub keep_ungeotagged: bool,
}

/// Parsed, individually validated records plus per-line rejections.
#[derive(Debug, Clone, Default)]
pub struct ParsedRecords {
    pub records: Vec<RawRecord>,
    pub rejected: Vec<Rejection>,
}

pub fn parse_background_lines(input: &str) -> ParsedRecords {
    let mut out = ParsedRecords::default();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(line) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => out.rejected.push(Rejection { line: line_no, reason }),
        }
    }
    out
}

fn parse_record(line: &str) -> Result<RawRecord, String> {
    let rec: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    validate_handle(&rec.user).map_err(|e| e.to_string())?;
    text::check_length(&rec.text).map_err(|e| e.to_string())?;
    rec.geo()?;
    Ok(rec)
}

/// Filters records to the collection region and converts them to low-visibility
/// background messages. Ids are provisional (record order); plan compilation renumbers.
pub fn ingest_background(records: &[RawRecord], bbox: &BoundingBox, opts: IngestOptions) -> Vec<Microblog> {
    let mut out = Vec::new();
    for rec in records {
        let Ok(geo) = rec.geo() else { continue };
        let keep = match geo {
            Some(p) => bbox.contains(&p),
            None => opts.keep_ungeotagged,
        };
        if !keep {
            continue;
        }
        let Ok(hashtags) = text::validate_microblog(&rec.text) else { continue };
        if validate_handle(&rec.user).is_err() {
            continue;
        }
        out.push(Microblog {
            id: out.len() as u64 + 1,
            scenario_time: rec.ts as f64,
            author: rec.user.clone(),
            text: rec.text.clone(),
            hashtags,
            visibility: VisibilityLevel::Low,
            source: SourceClass::Background,
            geo,
            retweet_of: None,
            category: None,
        });
    }
    out
}
