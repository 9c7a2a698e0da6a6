//! Plan compilation.
//!
//! One ChaCha8 stream seeded from the plan seed is consumed in this order:
//! 1. background subsampling (only when more background is supplied than needed);
//! 2. for each event in list order, for each of its templates in resolution order: the
//!    burst times, then per message its variant, author and (if the template has a
//!    region) its pin;
//! 3. quota fill, per category in manifest order and per level high, medium, low: per
//!    message the template, variant, author, pin and time.
//!
//! `max_variants` subsets are drawn from a separate generator per template so that
//! changing one cap does not shift any other draw.

use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::burst::schedule_burst;
use super::plan::{MselEvent, SchedulePlan, ScheduledMessage};
use super::policy::{visibility_volumes, PolicyError, VolumePolicy};
use crate::corpus::{
    draw_author, AuthorError, CorpusManifest, ManifestError, Microblog, MicroblogDraft, MicroblogError, PerVisibility,
    SourceClass, VisibilityLevel,
};
use crate::template::{ExpansionError, Template};
use crate::trend::TopicWindow;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("template id {0:?} used twice")]
    DuplicateTemplate(String),
    #[error("template {template:?} names unknown category {category:?}")]
    UnknownCategory { template: String, category: String },
    #[error("event {event:?} references unknown template {template:?}")]
    UnresolvedTemplate { event: String, template: String },
    #[error("event {0:?} has a negative or non-finite time")]
    EventTime(String),
    #[error("event {0:?} is earlier than the event before it")]
    EventOrder(String),
    #[error("template {template:?}: {source}")]
    Expansion { template: String, source: ExpansionError },
    #[error("background message {index}: {source}")]
    Background { index: usize, source: MicroblogError },
    #[error(transparent)]
    Author(#[from] AuthorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub name: String,
    pub planned: PerVisibility<u64>,
    pub scheduled: PerVisibility<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBaseline {
    pub event: String,
    pub time: f64,
    pub baseline: u64,
}

/// A burst that was cut short because its category level ran out of quota.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CappedBurst {
    pub event: String,
    pub template: String,
    pub requested: u64,
    pub scheduled: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileReport {
    pub total: usize,
    pub background: usize,
    pub background_fraction: f64,
    pub background_available: usize,
    /// Background messages that would have been needed to reach the target share.
    pub background_shortfall: usize,
    pub categories: Vec<CategoryCounts>,
    pub events: Vec<EventBaseline>,
    pub capped_bursts: Vec<CappedBurst>,
    /// Categories with a non-zero quota but no template to draw from.
    pub unfilled_categories: Vec<String>,
}

struct Prepared<'a> {
    template: &'a Template,
    /// Allowed variant numbers when `max_variants` restricts them.
    subset: Option<Vec<u64>>,
}

impl Prepared<'_> {
    fn draw<R: Rng>(&self, rng: &mut R) -> String {
        let n = match &self.subset {
            Some(s) => s[rng.gen_range(0..s.len())],
            None => rng.gen_range(0..self.template.body.variant_count()),
        };
        self.template.body.render_variant(n)
    }
}

fn subset_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn validate_inputs(
    manifest: &CorpusManifest,
    templates: &[Template],
    msel: &[MselEvent],
    policy: &VolumePolicy,
) -> Result<(), CompileError> {
    manifest.validate()?;
    policy.validate()?;
    let mut ids = HashSet::new();
    for t in templates {
        if !ids.insert(t.id.as_str()) {
            return Err(CompileError::DuplicateTemplate(t.id.clone()));
        }
        if manifest.category(&t.category).is_none() {
            return Err(CompileError::UnknownCategory { template: t.id.clone(), category: t.category.clone() });
        }
        t.body.check_lengths().map_err(|source| CompileError::Expansion { template: t.id.clone(), source })?;
    }
    let mut prev = f64::NEG_INFINITY;
    for ev in msel {
        if !(ev.scenario_time >= 0.0 && ev.scenario_time.is_finite()) {
            return Err(CompileError::EventTime(ev.id.clone()));
        }
        if ev.scenario_time < prev {
            return Err(CompileError::EventOrder(ev.id.clone()));
        }
        prev = ev.scenario_time;
    }
    Ok(())
}

/// Templates of an event: explicit references first, then templates tagged with the
/// event id, without repeats.
fn resolve_event(ev: &MselEvent, templates: &[Template]) -> Result<Vec<usize>, CompileError> {
    let by_id: HashMap<&str, usize> = templates.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for r in &ev.template_refs {
        let &i = by_id
            .get(r.as_str())
            .ok_or_else(|| CompileError::UnresolvedTemplate { event: ev.id.clone(), template: r.clone() })?;
        if seen.insert(i) {
            out.push(i);
        }
    }
    for (i, t) in templates.iter().enumerate() {
        if t.msel_event.as_deref() == Some(ev.id.as_str()) && seen.insert(i) {
            out.push(i);
        }
    }
    Ok(out)
}

/// Topmost in-window topic count over messages already placed, for a window ending at `t`.
fn baseline_at(t: f64, span: f64, background: &[Microblog], bursts: &[Microblog]) -> u64 {
    let lo = background.partition_point(|m| m.scenario_time <= t - span);
    let hi = background.partition_point(|m| m.scenario_time <= t);
    let mut window: Vec<&Microblog> = background[lo..hi].iter().collect();
    window.extend(bursts.iter().filter(|m| m.scenario_time > t - span && m.scenario_time <= t));
    window.sort_by(|a, b| a.scenario_time.total_cmp(&b.scenario_time));
    let mut w = TopicWindow::new(span);
    for m in window {
        w.observe_message(m).expect("sorted feed");
    }
    w.advance_to(t);
    w.topmost_count() as u64
}

fn build_message<R: Rng>(
    p: &Prepared<'_>,
    visibility: VisibilityLevel,
    source: SourceClass,
    time: f64,
    pool: &[String],
    rng: &mut R,
) -> Result<Microblog, CompileError> {
    let text = p.draw(rng);
    let author = draw_author(pool, rng)?.to_string();
    let mut draft = MicroblogDraft::new(text, visibility, source);
    draft.category = Some(p.template.category.clone());
    if let Some(region) = &p.template.geo_region {
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        draft.geo = Some(region.interpolate(u, v));
    }
    // Ids are provisional; the merged stream is renumbered.
    Ok(Microblog::from_draft(1, time, author, draft).map_err(AuthorError::from)?)
}

/// Builds the master stream from background chatter, event bursts and quota fill.
pub fn compile_plan(
    manifest: &CorpusManifest,
    templates: &[Template],
    msel: &[MselEvent],
    background: &[Microblog],
    policy: &VolumePolicy,
    seed: u64,
) -> Result<(SchedulePlan, CompileReport), CompileError> {
    validate_inputs(manifest, templates, msel, policy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = &manifest.username_pool;
    let span = manifest.exercise_span;

    let prepared: Vec<Prepared<'_>> = templates
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let count = t.body.variant_count();
            let subset = match t.max_variants {
                Some(m) if m < count => {
                    let mut sub_rng = ChaCha8Rng::seed_from_u64(subset_seed(seed, i));
                    let mut picked: Vec<u64> =
                        index::sample(&mut sub_rng, count as usize, m as usize).into_iter().map(|x| x as u64).collect();
                    picked.sort_unstable();
                    Some(picked)
                }
                _ => None,
            };
            Prepared { template: t, subset }
        })
        .collect();

    // Quotas exist only for categories that some template can fill.
    let has_template: HashSet<&str> = templates.iter().map(|t| t.category.as_str()).collect();
    let mut remaining: HashMap<&str, PerVisibility<u64>> = HashMap::new();
    let mut unfilled = Vec::new();
    let mut constructed_target = 0u64;
    for c in &manifest.categories {
        if has_template.contains(c.name.as_str()) {
            remaining.insert(&c.name, c.quota());
            constructed_target += c.component_sum();
        } else if c.component_sum() > 0 {
            unfilled.push(c.name.clone());
        }
    }

    // Background: subsample to the target share, then map native times onto the span.
    for (index, m) in background.iter().enumerate() {
        m.validate().map_err(|source| CompileError::Background { index, source })?;
    }
    let mut bg: Vec<&Microblog> = background.iter().collect();
    bg.sort_by(|a, b| a.scenario_time.total_cmp(&b.scenario_time));
    let f = manifest.background_fraction_target;
    let needed = if constructed_target == 0 || f >= 1.0 {
        bg.len()
    } else {
        (constructed_target as f64 * f / (1.0 - f)).round() as usize
    };
    let available = bg.len();
    if needed < bg.len() {
        let mut keep: Vec<usize> = index::sample(&mut rng, bg.len(), needed).into_vec();
        keep.sort_unstable();
        bg = keep.into_iter().map(|i| bg[i]).collect();
    }
    let placed_bg: Vec<Microblog> = match (bg.first(), bg.last()) {
        (Some(first), Some(last)) => {
            let (lo, hi) = (first.scenario_time, last.scenario_time);
            bg.iter()
                .map(|m| {
                    let t = if hi > lo { (m.scenario_time - lo) / (hi - lo) * span } else { 0.0 };
                    Microblog { scenario_time: t, retweet_of: None, ..(*m).clone() }
                })
                .collect()
        }
        _ => Vec::new(),
    };

    // Event bursts, sized from the trending baseline over the plan built so far.
    let mut bursts: Vec<Microblog> = Vec::new();
    let mut events = Vec::new();
    let mut capped = Vec::new();
    for ev in msel {
        let members = resolve_event(ev, templates)?;
        let h = baseline_at(ev.scenario_time, policy.trend_window, &placed_bg, &bursts);
        events.push(EventBaseline { event: ev.id.clone(), time: ev.scenario_time, baseline: h });
        let volumes = visibility_volumes(h, policy);
        for i in members {
            let p = &prepared[i];
            let level = p.template.visibility;
            let requested = if h == 0 { policy.min_volume } else { volumes.get(level) };
            let left = remaining.get_mut(p.template.category.as_str()).expect("category has a template");
            let n = requested.min(left.get(level));
            *left.get_mut(level) -= n;
            if n < requested {
                capped.push(CappedBurst {
                    event: ev.id.clone(),
                    template: p.template.id.clone(),
                    requested,
                    scheduled: n,
                });
            }
            let times = schedule_burst(ev.scenario_time, n as usize, policy.burst_window, &mut rng);
            for t in times {
                bursts.push(build_message(p, level, SourceClass::ConstructedMsel, t, pool, &mut rng)?);
            }
        }
    }

    // Fill the rest of each quota with generic chatter spread over the span.
    let mut fill = Vec::new();
    for c in &manifest.categories {
        let Some(left) = remaining.get(c.name.as_str()).copied() else { continue };
        let of_cat: Vec<&Prepared<'_>> = prepared.iter().filter(|p| p.template.category == c.name).collect();
        for level in VisibilityLevel::ALL {
            let n = left.get(level);
            if n == 0 {
                continue;
            }
            // (generic only, same visibility only)
            let tiers = [(true, true), (true, false), (false, true), (false, false)];
            let choices: Vec<&Prepared<'_>> = tiers
                .iter()
                .map(|&(generic, same)| {
                    of_cat
                        .iter()
                        .copied()
                        .filter(|p| {
                            (!generic || p.template.msel_event.is_none()) && (!same || p.template.visibility == level)
                        })
                        .collect::<Vec<_>>()
                })
                .find(|v| !v.is_empty())
                .expect("category has a template");
            for _ in 0..n {
                let p = choices[rng.gen_range(0..choices.len())];
                let text = p.draw(&mut rng);
                let author = draw_author(pool, &mut rng)?.to_string();
                let mut draft = MicroblogDraft::new(text, level, SourceClass::ConstructedGeneric);
                draft.category = Some(c.name.clone());
                if let Some(region) = &p.template.geo_region {
                    let (u, v): (f64, f64) = (rng.gen(), rng.gen());
                    draft.geo = Some(region.interpolate(u, v));
                }
                let t = rng.gen_range(0.0..span);
                fill.push(Microblog::from_draft(1, t, author, draft).map_err(AuthorError::from)?);
            }
        }
    }

    let background_count = placed_bg.len();
    let mut all: Vec<Microblog> = placed_bg;
    all.extend(bursts);
    all.extend(fill);
    all.sort_by(|a, b| a.scenario_time.total_cmp(&b.scenario_time));
    let messages: Vec<ScheduledMessage> = all
        .into_iter()
        .enumerate()
        .map(|(i, mut m)| {
            m.id = i as u64 + 1;
            ScheduledMessage { emit_time: m.scenario_time, payload: m }
        })
        .collect();

    let mut scheduled: HashMap<&str, PerVisibility<u64>> = HashMap::new();
    for m in &messages {
        if let Some(cat) = &m.payload.category {
            *scheduled.entry(cat.as_str()).or_default().get_mut(m.payload.visibility) += 1;
        }
    }
    let categories = manifest
        .categories
        .iter()
        .map(|c| CategoryCounts {
            name: c.name.clone(),
            planned: c.quota(),
            scheduled: scheduled.get(c.name.as_str()).copied().unwrap_or_default(),
        })
        .collect();
    let total = messages.len();
    let report = CompileReport {
        total,
        background: background_count,
        background_fraction: if total == 0 { 0.0 } else { background_count as f64 / total as f64 },
        background_available: available,
        background_shortfall: needed.saturating_sub(available),
        categories,
        events,
        capped_bursts: capped,
        unfilled_categories: unfilled,
    };
    let plan = SchedulePlan { seed, policy: policy.clone(), manifest: manifest.clone(), messages };
    Ok((plan, report))
}
