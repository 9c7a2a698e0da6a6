//! Sliding-window topic counting and trending rankings.
//!
//! A topic is a hashtag (counted case-folded, displayed as written) or a case-folded
//! alphabetic word of at least four letters that is not a stopword. Each message
//! contributes each of its topics at most once.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{hashtag_spans, Microblog};

pub const DEFAULT_WINDOW_SPAN: f64 = 300.0;
/// How far behind the newest observation a message may arrive.
pub const MONOTONICITY_TOLERANCE: f64 = 60.0;
pub const MIN_WORD_CHARS: usize = 4;

const STOPWORDS_TXT: &str = include_str!("../data/stopwords.txt");

pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS_TXT.lines().map(str::trim).filter(|l| !l.is_empty()).collect())
}

pub fn fold(s: &str) -> String {
    s.to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Topic {
    /// Case-folded counting key.
    pub key: String,
    pub display: String,
}

impl Topic {
    fn new(display: &str) -> Self {
        Topic { key: fold(display), display: display.to_string() }
    }
}

pub fn extract_topics(text: &str) -> Vec<Topic> {
    let spans = hashtag_spans(text);
    let mut found: Vec<(usize, Topic)> = spans.iter().map(|s| (s.offset, Topic::new(s.tag))).collect();

    // Blank out hashtags so their letters are not re-read as words.
    let mut masked = text.to_string();
    for s in spans.iter().rev() {
        masked.replace_range(s.offset..s.offset + s.tag.len(), &" ".repeat(s.tag.len()));
    }

    let stop = stopwords();
    let mut pos = 0;
    for token in masked.split_inclusive(char::is_whitespace) {
        let start = pos;
        pos += token.len();
        let t = token.trim();
        if t.is_empty() || t.starts_with('@') || t.contains("://") || t.starts_with("www.") {
            continue;
        }
        let mut run_start: Option<usize> = None;
        let bytes_end = token.len();
        for (i, c) in token.char_indices().chain(std::iter::once((bytes_end, ' '))) {
            if c.is_alphabetic() {
                run_start.get_or_insert(i);
            } else if let Some(rs) = run_start.take() {
                let word = &token[rs..i];
                if word.chars().count() >= MIN_WORD_CHARS {
                    let key = fold(word);
                    if !stop.contains(key.as_str()) {
                        found.push((start + rs, Topic { display: key.clone(), key }));
                    }
                }
            }
        }
    }

    found.sort_by_key(|(off, _)| *off);
    let mut seen = HashSet::new();
    found.into_iter().filter(|(_, t)| seen.insert(t.key.clone())).map(|(_, t)| t).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendingEntry {
    pub topic: String,
    pub count: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrendError {
    #[error("observation at {time} is more than {MONOTONICITY_TOLERANCE}s behind the window head {now}")]
    Monotonicity { time: f64, now: f64 },
}

/// Topic counts over the half-open interval `(now - span, now]`.
#[derive(Debug, Clone)]
pub struct TopicWindow {
    span: f64,
    now: f64,
    entries: VecDeque<(f64, String)>,
    counts: HashMap<String, usize>,
    display: HashMap<String, String>,
}

impl Default for TopicWindow {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW_SPAN)
    }
}

impl TopicWindow {
    pub fn new(span: f64) -> Self {
        assert!(span > 0.0, "window span must be positive");
        Self { span, now: f64::NEG_INFINITY, entries: VecDeque::new(), counts: HashMap::new(), display: HashMap::new() }
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    /// Newest observed or advanced-to time; `-inf` before the first call.
    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn observe_message(&mut self, msg: &Microblog) -> Result<(), TrendError> {
        self.observe(msg.scenario_time, &msg.text)
    }

    pub fn observe(&mut self, time: f64, text: &str) -> Result<(), TrendError> {
        self.observe_topics(time, &extract_topics(text))
    }

    pub fn observe_topics(&mut self, time: f64, topics: &[Topic]) -> Result<(), TrendError> {
        if time < self.now - MONOTONICITY_TOLERANCE {
            return Err(TrendError::Monotonicity { time, now: self.now });
        }
        self.advance_to(time);
        if time <= self.now - self.span {
            return Ok(());
        }
        let at = self.entries.partition_point(|(t, _)| *t <= time);
        for (k, topic) in topics.iter().enumerate() {
            self.entries.insert(at + k, (time, topic.key.clone()));
            *self.counts.entry(topic.key.clone()).or_insert(0) += 1;
            self.display.insert(topic.key.clone(), topic.display.clone());
        }
        Ok(())
    }

    /// Moves the window head forward (never backward) and evicts expired entries.
    pub fn advance_to(&mut self, time: f64) {
        if time > self.now {
            self.now = time;
        }
        let cutoff = self.now - self.span;
        while let Some((t, _)) = self.entries.front() {
            if *t > cutoff {
                break;
            }
            let (_, key) = self.entries.pop_front().expect("front exists");
            if let Some(c) = self.counts.get_mut(&key) {
                *c -= 1;
                if *c == 0 {
                    self.counts.remove(&key);
                    self.display.remove(&key);
                }
            }
        }
    }

    pub fn count(&self, topic: &str) -> usize {
        self.counts.get(&fold(topic)).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Retained `(time, key)` entries in time order.
    pub fn entries(&self) -> impl Iterator<Item = (f64, &str)> {
        self.entries.iter().map(|(t, k)| (*t, k.as_str()))
    }

    /// Highest counts first; ties broken by ascending case-folded topic.
    pub fn top_k(&self, k: usize) -> Vec<TrendingEntry> {
        let mut all: Vec<(&String, usize)> = self.counts.iter().map(|(key, c)| (key, *c)).collect();
        all.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        all.into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (key, count))| TrendingEntry {
                topic: self.display.get(key).cloned().unwrap_or_else(|| key.clone()),
                count,
                rank: i + 1,
            })
            .collect()
    }

    /// 1-based rank the topic would have in `top_k`, if it is present.
    pub fn rank_of(&self, topic: &str) -> Option<usize> {
        let key = fold(topic);
        let c = *self.counts.get(&key)?;
        let ahead = self.counts.iter().filter(|(k, n)| **n > c || (**n == c && k.as_str() < key.as_str())).count();
        Some(ahead + 1)
    }

    pub fn topmost_count(&self) -> usize {
        self.counts.values().copied().max().unwrap_or(0)
    }
}
