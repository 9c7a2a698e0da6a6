//! Volume policy, bursts, ghost amplification and plan compilation.

mod burst;
mod compile;
mod plan;
mod policy;

use thiserror::Error;

use crate::corpus::{MicroblogError, SourceClass};

pub use burst::{generate_ghost_retweets, schedule_burst, IdSequence};
pub use compile::{compile_plan, CappedBurst, CategoryCounts, CompileError, CompileReport, EventBaseline};
pub use plan::{load_msel, manifest_digest, MselEvent, PlanError, SchedulePlan, ScheduledMessage};
pub use policy::{visibility_volumes, GhostRetweetPolicy, PolicyError, VolumePolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("only authoritative or injected messages are amplified, not {0:?}")]
    NotAmplifiable(SourceClass),
    #[error("ghost pool is empty")]
    EmptyGhostPool,
    #[error(transparent)]
    Message(#[from] MicroblogError),
}

/// Baseline high-visibility volume: the in-window count of the top trending topic.
pub fn baseline_volume(w: &crate::trend::TopicWindow) -> u64 {
    w.topmost_count() as u64
}
