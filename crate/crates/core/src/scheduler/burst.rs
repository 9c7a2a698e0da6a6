use rand::seq::index;
use rand::Rng;

use super::plan::ScheduledMessage;
use super::policy::GhostRetweetPolicy;
use super::ScheduleError;
use crate::corpus::{retweet_text, Account, Microblog, MicroblogDraft, SourceClass};

/// Monotonic message-id allocator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdSequence {
    next: u64,
}

impl IdSequence {
    /// The first id handed out is `first`.
    pub fn starting_at(first: u64) -> Self {
        Self { next: first }
    }

    pub fn next_id(&mut self) -> u64 {
        let id = self.next;
        self.next += 1;
        id
    }

    pub fn peek(&self) -> u64 {
        self.next
    }
}

/// `n` independent uniform times on `[t0, t0 + w)`, sorted ascending.
pub fn schedule_burst<R: Rng + ?Sized>(t0: f64, n: usize, w: f64, rng: &mut R) -> Vec<f64> {
    assert!(w > 0.0, "burst window must be positive");
    let mut out: Vec<f64> = (0..n).map(|_| rng.gen_range(t0..t0 + w)).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// One-hop amplification of an authoritative or injected post by ghost accounts.
///
/// Authors are drawn without replacement when the ghost pool is large enough, with
/// replacement otherwise; they are drawn before the emit times, and the k-th author
/// gets the k-th earliest time.
pub fn generate_ghost_retweets<R: Rng + ?Sized>(
    msg: &Microblog,
    policy: &GhostRetweetPolicy,
    ghosts: &[Account],
    ids: &mut IdSequence,
    rng: &mut R,
) -> Result<Vec<ScheduledMessage>, ScheduleError> {
    if !matches!(msg.source, SourceClass::Authoritative | SourceClass::ControllerInjection) {
        return Err(ScheduleError::NotAmplifiable(msg.source));
    }
    let count = policy.count_by_visibility.get(msg.visibility) as usize;
    if count == 0 {
        return Ok(Vec::new());
    }
    if ghosts.is_empty() {
        return Err(ScheduleError::EmptyGhostPool);
    }
    let authors: Vec<&Account> = if count <= ghosts.len() {
        index::sample(rng, ghosts.len(), count).into_iter().map(|i| &ghosts[i]).collect()
    } else {
        (0..count).map(|_| &ghosts[rng.gen_range(0..ghosts.len())]).collect()
    };
    let duration = policy.duration_by_visibility.get(msg.visibility);
    let times = schedule_burst(msg.scenario_time, count, duration, rng);
    let text = retweet_text(&msg.author, &msg.text);

    let mut out = Vec::with_capacity(count);
    for (author, t) in authors.into_iter().zip(times) {
        let mut draft = MicroblogDraft::new(text.clone(), msg.visibility, SourceClass::GhostRetweet);
        draft.retweet_of = Some(msg.id);
        draft.category = msg.category.clone();
        let payload = Microblog::from_draft(ids.next_id(), t, author.handle.clone(), draft)?;
        out.push(ScheduledMessage { emit_time: t, payload });
    }
    Ok(out)
}
