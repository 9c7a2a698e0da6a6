use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::policy::VolumePolicy;
use crate::corpus::{CorpusManifest, Microblog, MicroblogError};

/// One scripted scenario event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MselEvent {
    pub id: String,
    #[serde(rename = "t")]
    pub scenario_time: f64,
    #[serde(default)]
    pub description: String,
    #[serde(rename = "templates", default)]
    pub template_refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledMessage {
    pub emit_time: f64,
    pub payload: Microblog,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("malformed plan: {0}")]
    Json(String),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("manifest digest mismatch: header says {header}, manifest hashes to {actual}")]
    Digest { header: String, actual: String },
    #[error("header message_count {header} but {actual} messages")]
    Count { header: usize, actual: usize },
    #[error("message {index}: emit_time {time} is negative or not finite")]
    BadTime { index: usize, time: f64 },
    #[error("message {index}: emit_time {time} is earlier than the previous message")]
    Unsorted { index: usize, time: f64 },
    #[error("message {index}: emit_time {emit} differs from payload scenario_time {payload}")]
    TimeMismatch { index: usize, emit: f64, payload: f64 },
    #[error("message id {0} appears twice")]
    DuplicateId(u64),
    #[error("message {id} retweets {parent}, which is not an earlier message of the plan")]
    DanglingRetweet { id: u64, parent: u64 },
    #[error("message {id}: {source}")]
    Message { id: u64, source: MicroblogError },
}

/// The timed master stream. Messages are sorted by `emit_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulePlan {
    pub seed: u64,
    pub policy: VolumePolicy,
    pub manifest: CorpusManifest,
    pub messages: Vec<ScheduledMessage>,
}

#[derive(Serialize, Deserialize)]
struct PlanHeader {
    seed: u64,
    policy: VolumePolicy,
    manifest_digest: String,
    manifest: CorpusManifest,
    message_count: usize,
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    header: PlanHeader,
    messages: Vec<ScheduledMessage>,
}

/// Hex SHA-256 of the compact JSON form of a manifest.
pub fn manifest_digest(manifest: &CorpusManifest) -> String {
    let bytes = serde_json::to_vec(manifest).expect("manifest serializes");
    hex::encode(Sha256::digest(bytes))
}

impl SchedulePlan {
    pub fn validate(&self) -> Result<(), PlanError> {
        let mut seen: HashSet<u64> = HashSet::with_capacity(self.messages.len());
        let mut prev = f64::NEG_INFINITY;
        for (index, m) in self.messages.iter().enumerate() {
            let t = m.emit_time;
            if !(t >= 0.0 && t.is_finite()) {
                return Err(PlanError::BadTime { index, time: t });
            }
            if t < prev {
                return Err(PlanError::Unsorted { index, time: t });
            }
            prev = t;
            if m.payload.scenario_time != t {
                return Err(PlanError::TimeMismatch { index, emit: t, payload: m.payload.scenario_time });
            }
            let id = m.payload.id;
            m.payload.validate().map_err(|source| PlanError::Message { id, source })?;
            if let Some(parent) = m.payload.retweet_of {
                if !seen.contains(&parent) {
                    return Err(PlanError::DanglingRetweet { id, parent });
                }
            }
            if !seen.insert(id) {
                return Err(PlanError::DuplicateId(id));
            }
        }
        Ok(())
    }

    pub fn max_id(&self) -> u64 {
        self.messages.iter().map(|m| m.payload.id).max().unwrap_or(0)
    }

    /// Index from message id into `messages`.
    pub fn id_index(&self) -> HashMap<u64, usize> {
        self.messages.iter().enumerate().map(|(i, m)| (m.payload.id, i)).collect()
    }

    pub fn to_json(&self) -> String {
        let file = PlanFile {
            header: PlanHeader {
                seed: self.seed,
                policy: self.policy.clone(),
                manifest_digest: manifest_digest(&self.manifest),
                manifest: self.manifest.clone(),
                message_count: self.messages.len(),
            },
            messages: self.messages.clone(),
        };
        serde_json::to_string(&file).expect("plan serializes")
    }

    /// Parses and fully validates a plan file.
    pub fn from_json(text: &str) -> Result<Self, PlanError> {
        let file: PlanFile = serde_json::from_str(text).map_err(|e| PlanError::Json(e.to_string()))?;
        let actual = manifest_digest(&file.header.manifest);
        if actual != file.header.manifest_digest {
            return Err(PlanError::Digest { header: file.header.manifest_digest, actual });
        }
        if file.header.message_count != file.messages.len() {
            return Err(PlanError::Count { header: file.header.message_count, actual: file.messages.len() });
        }
        let plan = Self {
            seed: file.header.seed,
            policy: file.header.policy,
            manifest: file.header.manifest,
            messages: file.messages,
        };
        plan.validate()?;
        Ok(plan)
    }
}

/// Reads a JSON-lines event list.
pub fn load_msel(input: &str) -> Result<Vec<MselEvent>, PlanError> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ev: MselEvent =
            serde_json::from_str(line).map_err(|e| PlanError::Line { line: idx + 1, message: e.to_string() })?;
        out.push(ev);
    }
    Ok(out)
}
