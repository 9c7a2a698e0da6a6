//! After-action reports over an event log or a plan.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{extract_hashtags, Microblog, PerVisibility, SourceClass, VisibilityLevel};
use crate::eventlog::{EventKind, EventLogEntry};
use crate::scheduler::{MselEvent, SchedulePlan};
use crate::template::Template;
use crate::trend::{fold, TopicWindow};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RetweetEdge {
    /// The retweeting account.
    pub from: String,
    /// Author of the retweeted message.
    pub to: String,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DanglingRetweet {
    pub seq: u64,
    pub id: u64,
    pub retweet_of: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NetworkReport {
    pub edges: Vec<RetweetEdge>,
    /// Accounts that retweeted themselves; kept out of `edges`.
    pub self_edges: Vec<RetweetEdge>,
    pub dangling: Vec<DanglingRetweet>,
}

impl NetworkReport {
    /// `from<TAB>to<TAB>weight` lines.
    pub fn to_tsv(&self) -> String {
        self.edges.iter().map(|e| format!("{}\t{}\t{}\n", e.from, e.to, e.weight)).collect()
    }
}

/// Directed retweeter-to-author graph. Each retweet links to the author of its
/// immediate parent. With `humans_only`, ghost retweets are left out.
pub fn build_retweet_network(log: &[EventLogEntry], humans_only: bool) -> NetworkReport {
    let authors: HashMap<u64, &str> = log.iter().map(|e| (e.message.id, e.message.author.as_str())).collect();
    let mut weights: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut report = NetworkReport::default();
    for e in log {
        let counted = match e.kind {
            EventKind::Retweeted => true,
            EventKind::GhostRetweet => !humans_only,
            _ => false,
        };
        let Some(parent) = e.message.retweet_of.filter(|_| counted) else { continue };
        match authors.get(&parent) {
            Some(to) => *weights.entry((e.message.author.clone(), to.to_string())).or_default() += 1,
            None => report.dangling.push(DanglingRetweet { seq: e.seq, id: e.message.id, retweet_of: parent }),
        }
    }
    for ((from, to), weight) in weights {
        let edge = RetweetEdge { from, to, weight };
        if edge.from == edge.to {
            report.self_edges.push(edge);
        } else {
            report.edges.push(edge);
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceShare {
    pub source: SourceClass,
    pub count: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryBreakdown {
    pub name: String,
    pub high: u64,
    pub medium: u64,
    pub low: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub total: u64,
    pub background_fraction: f64,
    pub by_source: Vec<SourceShare>,
    pub by_visibility: PerVisibility<u64>,
    /// Sorted by category name.
    pub categories: Vec<CategoryBreakdown>,
}

pub fn composition_of<'a>(messages: impl IntoIterator<Item = &'a Microblog>) -> CompositionReport {
    let mut total = 0u64;
    let mut sources: HashMap<SourceClass, u64> = HashMap::new();
    let mut vis = PerVisibility::<u64>::default();
    let mut cats: BTreeMap<&str, PerVisibility<u64>> = BTreeMap::new();
    for m in messages {
        total += 1;
        *sources.entry(m.source).or_default() += 1;
        *vis.get_mut(m.visibility) += 1;
        if let Some(c) = &m.category {
            *cats.entry(c.as_str()).or_default().get_mut(m.visibility) += 1;
        }
    }
    let frac = |n: u64| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    let by_source: Vec<SourceShare> = SourceClass::ALL
        .iter()
        .map(|&s| {
            let count = sources.get(&s).copied().unwrap_or(0);
            SourceShare { source: s, count, fraction: frac(count) }
        })
        .collect();
    CompositionReport {
        total,
        background_fraction: frac(sources.get(&SourceClass::Background).copied().unwrap_or(0)),
        by_source,
        by_visibility: vis,
        categories: cats
            .into_iter()
            .map(|(name, q)| CategoryBreakdown {
                name: name.to_string(),
                high: q.high,
                medium: q.medium,
                low: q.low,
                total: q.high + q.medium + q.low,
            })
            .collect(),
    }
}

pub fn composition_from_plan(plan: &SchedulePlan) -> CompositionReport {
    composition_of(plan.messages.iter().map(|m| &m.payload))
}

/// Composition of the logged messages, optionally restricted to some entry kinds.
pub fn composition_from_log(log: &[EventLogEntry], kinds: Option<&[EventKind]>) -> CompositionReport {
    composition_of(log.iter().filter(|e| kinds.is_none_or(|k| k.contains(&e.kind))).map(|e| &e.message))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountEngagement {
    pub handle: String,
    pub messages: u64,
    /// Mean scenario seconds between consecutive messages; absent below two messages.
    pub mean_interval: Option<f64>,
    pub retweets_received: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementReport {
    /// Sorted by handle.
    pub accounts: Vec<AccountEngagement>,
    /// Mean of the per-account intervals, over accounts that have one.
    pub mean_interval: Option<f64>,
}

/// Participant activity: posts, retweets and injections by author, plus how often each
/// author's messages were retweeted, by anyone.
pub fn engagement_report(log: &[EventLogEntry]) -> EngagementReport {
    engagement_report_for(log, &[EventKind::Posted, EventKind::Retweeted, EventKind::Injected])
}

pub fn engagement_report_for(log: &[EventLogEntry], kinds: &[EventKind]) -> EngagementReport {
    let authors: HashMap<u64, &str> = log.iter().map(|e| (e.message.id, e.message.author.as_str())).collect();
    let mut received: HashMap<&str, u64> = HashMap::new();
    for e in log {
        if let Some(author) = e.message.retweet_of.and_then(|p| authors.get(&p)) {
            *received.entry(author).or_default() += 1;
        }
    }
    let mut times: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for e in log.iter().filter(|e| kinds.contains(&e.kind)) {
        times.entry(e.message.author.as_str()).or_default().push(e.scenario_time);
    }
    let accounts: Vec<AccountEngagement> = times
        .into_iter()
        .map(|(handle, mut ts)| {
            ts.sort_by(f64::total_cmp);
            let mean_interval = (ts.len() >= 2).then(|| (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64);
            AccountEngagement {
                handle: handle.to_string(),
                messages: ts.len() as u64,
                mean_interval,
                retweets_received: received.get(handle).copied().unwrap_or(0),
            }
        })
        .collect();
    let intervals: Vec<f64> = accounts.iter().filter_map(|a| a.mean_interval).collect();
    let mean_interval = (!intervals.is_empty()).then(|| intervals.iter().sum::<f64>() / intervals.len() as f64);
    EngagementReport { accounts, mean_interval }
}

/// Whether one event burst got its hashtag onto the trending list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstReach {
    pub event: String,
    pub template: String,
    pub visibility: VisibilityLevel,
    pub topic: String,
    pub messages: usize,
    /// Best rank seen right after each of the burst's own messages entered the window.
    pub best_rank: Option<usize>,
    pub reached: bool,
}

/// Hashtags shared by every variant of a template, as case-folded keys.
fn common_hashtags(t: &Template) -> Vec<String> {
    let n = t.body.variant_count().min(64);
    let mut common: Option<Vec<String>> = None;
    for i in 0..n {
        let tags: Vec<String> = extract_hashtags(&t.body.render_variant(i)).iter().map(|h| fold(h)).collect();
        common = Some(match common {
            None => tags,
            Some(c) => c.into_iter().filter(|x| tags.contains(x)).collect(),
        });
    }
    common.unwrap_or_default()
}

/// Replays a plan through a trending window and reports, for every event template with a
/// stable hashtag, whether that hashtag ranked within `k` while its burst was running.
pub fn burst_trend_reach(plan: &SchedulePlan, templates: &[Template], msel: &[MselEvent], k: usize) -> Vec<BurstReach> {
    struct Tracked {
        reach: BurstReach,
        start: f64,
        end: f64,
        category: String,
    }
    let mut tracked: Vec<Tracked> = Vec::new();
    for ev in msel {
        for t in templates {
            let linked = t.msel_event.as_deref() == Some(ev.id.as_str()) || ev.template_refs.contains(&t.id);
            let Some(topic) = common_hashtags(t).into_iter().next().filter(|_| linked) else { continue };
            tracked.push(Tracked {
                reach: BurstReach {
                    event: ev.id.clone(),
                    template: t.id.clone(),
                    visibility: t.visibility,
                    topic,
                    messages: 0,
                    best_rank: None,
                    reached: false,
                },
                start: ev.scenario_time,
                end: ev.scenario_time + plan.policy.burst_window,
                category: t.category.clone(),
            });
        }
    }
    let mut w = TopicWindow::new(plan.policy.trend_window);
    for sm in &plan.messages {
        let m = &sm.payload;
        w.observe_message(m).expect("plan is time ordered");
        if m.source != SourceClass::ConstructedMsel {
            continue;
        }
        for tr in tracked.iter_mut() {
            let own = sm.emit_time >= tr.start
                && sm.emit_time < tr.end
                && m.visibility == tr.reach.visibility
                && m.category.as_deref() == Some(tr.category.as_str())
                && m.hashtags.iter().any(|h| fold(h) == tr.reach.topic);
            if !own {
                continue;
            }
            tr.reach.messages += 1;
            if let Some(rank) = w.rank_of(&tr.reach.topic) {
                tr.reach.best_rank = Some(tr.reach.best_rank.map_or(rank, |b: usize| b.min(rank)));
                tr.reach.reached |= rank <= k;
            }
        }
    }
    tracked.into_iter().map(|t| t.reach).collect()
}

/// Left-aligned columns separated by two spaces.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(headers.to_vec());
    for row in rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

pub fn network_table(r: &NetworkReport) -> String {
    let rows: Vec<Vec<String>> =
        r.edges.iter().map(|e| vec![e.from.clone(), e.to.clone(), e.weight.to_string()]).collect();
    let mut out = render_table(&["from", "to", "weight"], &rows);
    for e in &r.self_edges {
        out += &format!("self-retweet: {} x{}\n", e.from, e.weight);
    }
    for d in &r.dangling {
        out += &format!("dangling: seq {} (id {}) retweets unknown id {}\n", d.seq, d.id, d.retweet_of);
    }
    out
}

pub fn composition_table(r: &CompositionReport) -> String {
    let mut out = format!("total {}  background fraction {:.4}\n\n", r.total, r.background_fraction);
    let rows: Vec<Vec<String>> = r
        .by_source
        .iter()
        .map(|s| vec![s.source.as_str().to_string(), s.count.to_string(), format!("{:.4}", s.fraction)])
        .collect();
    out += &render_table(&["source", "count", "fraction"], &rows);
    out += "\n";
    let rows: Vec<Vec<String>> = VisibilityLevel::ALL
        .iter()
        .map(|&v| vec![v.as_str().to_string(), r.by_visibility.get(v).to_string()])
        .collect();
    out += &render_table(&["visibility", "count"], &rows);
    out += "\n";
    let rows: Vec<Vec<String>> = r
        .categories
        .iter()
        .map(|c| vec![c.name.clone(), c.high.to_string(), c.medium.to_string(), c.low.to_string(), c.total.to_string()])
        .collect();
    out += &render_table(&["category", "high", "medium", "low", "total"], &rows);
    out
}

pub fn engagement_table(r: &EngagementReport) -> String {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |s| format!("{s:.1}"));
    let rows: Vec<Vec<String>> = r
        .accounts
        .iter()
        .map(|a| vec![a.handle.clone(), a.messages.to_string(), fmt(a.mean_interval), a.retweets_received.to_string()])
        .collect();
    let mut out = render_table(&["account", "messages", "mean_interval_s", "retweets_received"], &rows);
    out += &format!("mean interval over active accounts: {} s\n", fmt(r.mean_interval));
    out
}
