//! Exercise state: plan cursor, pending ghost retweets, the event log and the indexes
//! the read endpoints use. Every mutation goes through one `Engine`, and callers pass
//! the scenario time explicitly.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::io::Write;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stimstream_core::corpus::{
    draw_author, retweet_text, validate_handle, validate_microblog, Account, AccountKind, GeoCircle, GeoPoint,
    Microblog, MicroblogDraft, SourceClass, TextError, VisibilityLevel,
};
use stimstream_core::eventlog::{write_entry, EventKind, EventLogEntry};
use stimstream_core::scheduler::{generate_ghost_retweets, GhostRetweetPolicy, IdSequence, SchedulePlan};
use stimstream_core::trend::{extract_topics, fold, TopicWindow, TrendingEntry};
use thiserror::Error;

use crate::clock::unix_ms;
use crate::roster::Roster;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("message {0} not found")]
    UnknownMessage(u64),
    #[error("invalid author handle {0:?}")]
    BadHandle(String),
    #[error("ghost retweets are configured but the roster has no ghost accounts")]
    NoGhosts,
    #[error("event log write failed: {0}")]
    Sink(String),
}

struct Pending {
    time: f64,
    order: u64,
    kind: EventKind,
    message: Microblog,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // Reversed: BinaryHeap pops the earliest time, then the earliest scheduled.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.order.cmp(&self.order))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Page {
    pub entries: Vec<EventLogEntry>,
    /// Pass as `since` to get the following page.
    pub next: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapPin {
    pub id: u64,
    pub seq: u64,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Progress {
    pub plan_total: usize,
    pub plan_emitted: usize,
    pub pending_retweets: usize,
    pub log_len: u64,
}

pub struct Engine {
    plan: Arc<SchedulePlan>,
    cursor: usize,
    pending: BinaryHeap<Pending>,
    pending_order: u64,
    policy: GhostRetweetPolicy,
    ghosts: Vec<Account>,
    pool: Vec<String>,
    profiles: HashMap<String, Account>,
    rng: ChaCha8Rng,
    ids: IdSequence,
    log: Vec<EventLogEntry>,
    sink: Option<Box<dyn Write + Send>>,
    window: TopicWindow,
    by_topic: HashMap<String, Vec<usize>>,
    geotagged: Vec<usize>,
    by_id: HashMap<u64, usize>,
}

impl Engine {
    pub fn new(plan: Arc<SchedulePlan>, roster: &Roster, seed: u64) -> Result<Self, EngineError> {
        let policy = plan.policy.retweet_policy.clone();
        let ghosts = roster.ghosts();
        let amplifies = VisibilityLevel::ALL.iter().any(|v| policy.count_by_visibility.get(*v) > 0);
        if amplifies && ghosts.is_empty() {
            return Err(EngineError::NoGhosts);
        }
        let mut profiles: HashMap<String, Account> = HashMap::new();
        let citizen = |h: &str| Account {
            handle: h.to_string(),
            kind: AccountKind::Citizen,
            visibility: VisibilityLevel::Low,
            profile_url: None,
        };
        for h in &plan.manifest.username_pool {
            profiles.insert(h.clone(), citizen(h));
        }
        for m in &plan.messages {
            profiles.entry(m.payload.author.clone()).or_insert_with(|| citizen(&m.payload.author));
        }
        for a in &roster.accounts {
            profiles.insert(a.handle.clone(), a.account());
        }
        Ok(Self {
            ids: IdSequence::starting_at(plan.max_id() + 1),
            window: TopicWindow::new(plan.policy.trend_window),
            pool: plan.manifest.username_pool.clone(),
            plan,
            cursor: 0,
            pending: BinaryHeap::new(),
            pending_order: 0,
            policy,
            ghosts,
            profiles,
            rng: ChaCha8Rng::seed_from_u64(seed),
            log: Vec::new(),
            sink: None,
            by_topic: HashMap::new(),
            geotagged: Vec::new(),
            by_id: HashMap::new(),
        })
    }

    /// Every appended entry is also written, as one JSON line, to `sink`.
    pub fn with_sink(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.sink = Some(sink);
        self
    }

    fn append(
        &mut self,
        kind: EventKind,
        scenario_time: f64,
        message: Microblog,
    ) -> Result<EventLogEntry, EngineError> {
        let entry =
            EventLogEntry { seq: self.log.len() as u64 + 1, wall_time: unix_ms(), scenario_time, kind, message };
        if let Some(sink) = self.sink.as_mut() {
            write_entry(&mut *sink, &entry).and_then(|_| sink.flush()).map_err(|e| EngineError::Sink(e.to_string()))?;
        }
        let idx = self.log.len();
        let topics = extract_topics(&entry.message.text);
        let at = if scenario_time < self.window.now() { self.window.now() } else { scenario_time };
        if self.window.observe_topics(scenario_time, &topics).is_err() {
            // Far behind the window head; count it as current rather than drop it.
            let _ = self.window.observe_topics(at, &topics);
        }
        for t in &topics {
            self.by_topic.entry(t.key.clone()).or_default().push(idx);
        }
        if entry.message.geo.is_some() {
            self.geotagged.push(idx);
        }
        self.by_id.insert(entry.message.id, idx);
        self.log.push(entry.clone());
        Ok(entry)
    }

    /// Emits everything due at or before `now`, plan and ghost retweets merged by time
    /// (plan first on ties). Returns the number of entries appended.
    pub fn flush(&mut self, now: f64) -> Result<usize, EngineError> {
        let mut n = 0;
        loop {
            let plan_t = self.plan.messages.get(self.cursor).map(|m| m.emit_time).filter(|t| *t <= now);
            let ghost_t = self.pending.peek().map(|p| p.time).filter(|t| *t <= now);
            match (plan_t, ghost_t) {
                (None, None) => break,
                (Some(pt), g) if g.is_none_or(|gt| pt <= gt) => {
                    let m = self.plan.messages[self.cursor].clone();
                    self.cursor += 1;
                    self.append(EventKind::Emitted, pt, m.payload)?;
                }
                _ => {
                    let p = self.pending.pop().expect("peeked");
                    let mut message = p.message;
                    message.id = self.ids.next_id();
                    self.append(p.kind, p.time, message)?;
                }
            }
            n += 1;
        }
        self.window.advance_to(now);
        Ok(n)
    }

    /// Earliest scenario time at which something is due.
    pub fn next_due(&self) -> Option<f64> {
        let plan_t = self.plan.messages.get(self.cursor).map(|m| m.emit_time);
        let ghost_t = self.pending.peek().map(|p| p.time);
        match (plan_t, ghost_t) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn schedule_ghosts(&mut self, parent: &Microblog) -> Result<(), EngineError> {
        // Provisional ids; real ones are assigned when each retweet is emitted.
        let mut scratch = IdSequence::starting_at(parent.id + 1);
        let out = generate_ghost_retweets(parent, &self.policy, &self.ghosts, &mut scratch, &mut self.rng)
            .map_err(|_| EngineError::NoGhosts)?;
        for sm in out {
            self.pending_order += 1;
            self.pending.push(Pending {
                time: sm.emit_time,
                order: self.pending_order,
                kind: EventKind::GhostRetweet,
                message: sm.payload,
            });
        }
        Ok(())
    }

    fn live(
        &mut self,
        now: f64,
        kind: EventKind,
        author: String,
        draft: MicroblogDraft,
    ) -> Result<EventLogEntry, EngineError> {
        self.flush(now)?;
        let message = Microblog::from_draft(self.ids.peek(), now, author, draft).map_err(|e| match e {
            stimstream_core::corpus::MicroblogError::Text(t) => EngineError::Text(t),
            other => EngineError::BadHandle(other.to_string()),
        })?;
        self.ids.next_id();
        let entry = self.append(kind, now, message)?;
        if matches!(kind, EventKind::Posted | EventKind::Injected) {
            self.schedule_ghosts(&entry.message)?;
        }
        Ok(entry)
    }

    /// An operator post: authoritative, at the account's visibility, amplified by ghosts.
    pub fn post(
        &mut self,
        now: f64,
        account: &Account,
        text: &str,
        geo: Option<GeoPoint>,
    ) -> Result<EventLogEntry, EngineError> {
        validate_microblog(text)?;
        let mut draft = MicroblogDraft::new(text, account.visibility, SourceClass::Authoritative);
        draft.geo = geo;
        self.live(now, EventKind::Posted, account.handle.clone(), draft)
    }

    /// Retweet of any logged message; the parent is the message itself, even if it is a
    /// retweet.
    pub fn retweet(&mut self, now: f64, account: &Account, id: u64) -> Result<EventLogEntry, EngineError> {
        self.flush(now)?;
        let parent = self.message(id).ok_or(EngineError::UnknownMessage(id))?.clone();
        let mut draft = MicroblogDraft::new(
            retweet_text(&parent.author, &parent.text),
            account.visibility,
            SourceClass::Authoritative,
        );
        draft.retweet_of = Some(parent.id);
        self.live(now, EventKind::Retweeted, account.handle.clone(), draft)
    }

    /// A controller stimulus with hand-picked visibility, attributed to a citizen.
    pub fn inject(
        &mut self,
        now: f64,
        text: &str,
        visibility: VisibilityLevel,
        author: Option<&str>,
    ) -> Result<EventLogEntry, EngineError> {
        validate_microblog(text)?;
        let author = match author {
            Some(h) => {
                validate_handle(h).map_err(|_| EngineError::BadHandle(h.to_string()))?;
                h.to_string()
            }
            None => {
                draw_author(&self.pool, &mut self.rng).map_err(|e| EngineError::BadHandle(e.to_string()))?.to_string()
            }
        };
        self.profiles.entry(author.clone()).or_insert_with(|| Account {
            handle: author.clone(),
            kind: AccountKind::Citizen,
            visibility: VisibilityLevel::Low,
            profile_url: None,
        });
        let draft = MicroblogDraft::new(text, visibility, SourceClass::ControllerInjection);
        self.live(now, EventKind::Injected, author, draft)
    }

    pub fn message(&self, id: u64) -> Option<&Microblog> {
        self.by_id.get(&id).map(|&i| &self.log[i].message)
    }

    pub fn entries(&self) -> &[EventLogEntry] {
        &self.log
    }

    pub fn head(&self) -> u64 {
        self.log.len() as u64
    }

    /// Entries with `seq > since`, at most `limit`.
    pub fn stream(&self, since: u64, limit: usize) -> Page {
        let start = (since as usize).min(self.log.len());
        let entries: Vec<EventLogEntry> = self.log[start..].iter().take(limit).cloned().collect();
        let next = entries.last().map_or(since, |e| e.seq);
        Page { entries, next }
    }

    pub fn topic(&self, topic: &str, since: u64, limit: usize) -> Page {
        let key = fold(topic);
        let Some(idxs) = self.by_topic.get(&key) else { return Page { entries: vec![], next: since } };
        let from = idxs.partition_point(|&i| self.log[i].seq <= since);
        let entries: Vec<EventLogEntry> = idxs[from..].iter().take(limit).map(|&i| self.log[i].clone()).collect();
        let next = entries.last().map_or(since, |e| e.seq);
        Page { entries, next }
    }

    pub fn trending(&mut self, now: f64, k: usize) -> Vec<TrendingEntry> {
        self.window.advance_to(now);
        self.window.top_k(k)
    }

    pub fn map(&self, topic: Option<&str>, circle: Option<&GeoCircle>) -> Vec<MapPin> {
        let wanted: Option<HashSet<usize>> =
            topic.map(|t| self.by_topic.get(&fold(t)).map(|v| v.iter().copied().collect()).unwrap_or_default());
        self.geotagged
            .iter()
            .filter(|i| wanted.as_ref().is_none_or(|w| w.contains(i)))
            .filter_map(|&i| {
                let e = &self.log[i];
                let p = e.message.geo?;
                if circle.is_some_and(|c| !c.contains(&p)) {
                    return None;
                }
                Some(MapPin { id: e.message.id, seq: e.seq, lat: p.lat(), lon: p.lon() })
            })
            .collect()
    }

    pub fn profile(&self, handle: &str) -> Option<&Account> {
        self.profiles.get(handle)
    }

    pub fn progress(&self) -> Progress {
        Progress {
            plan_total: self.plan.messages.len(),
            plan_emitted: self.cursor,
            pending_retweets: self.pending.len(),
            log_len: self.head(),
        }
    }

    /// Plan fully emitted and no ghost retweets outstanding.
    pub fn is_idle(&self) -> bool {
        self.cursor == self.plan.messages.len() && self.pending.is_empty()
    }
}
