use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stimstream_core::analysis::{
    build_retweet_network, composition_from_log, composition_from_plan, engagement_report,
};
use stimstream_core::corpus::{
    assign_author, Account, AccountKind, BoundingBox, CategorySpec, CorpusManifest, GeoPoint, Microblog,
    MicroblogDraft, PerVisibility, SourceClass, VisibilityLevel,
};
use stimstream_core::eventlog::{EventKind, EventLogEntry};
use stimstream_core::scheduler::{
    compile_plan, generate_ghost_retweets, schedule_burst, visibility_volumes, GhostRetweetPolicy, IdSequence,
    MselEvent, VolumePolicy,
};
use stimstream_core::template::Template;
use stimstream_core::trend::TopicWindow;

const LEVELS: [VisibilityLevel; 3] = [VisibilityLevel::High, VisibilityLevel::Medium, VisibilityLevel::Low];

fn manifest(categories: Vec<CategorySpec>, span: f64) -> CorpusManifest {
    CorpusManifest {
        categories,
        background_fraction_target: 0.76,
        username_pool: (0..25).map(|i| format!("resident{i}")).collect(),
        bbox: BoundingBox::new(GeoPoint::new(39.5, -84.5).unwrap(), GeoPoint::new(40.1, -83.9).unwrap()).unwrap(),
        exercise_span: span,
    }
}

fn background(n: usize) -> Vec<Microblog> {
    (0..n)
        .map(|i| {
            let d = MicroblogDraft::new(
                format!("quiet evening downtown {}", i % 11),
                VisibilityLevel::Low,
                SourceClass::Background,
            );
            Microblog::from_draft(i as u64 + 1, 5_000.0 + 7.0 * i as f64, "local", d).unwrap()
        })
        .collect()
}

/// Per category: (high, medium, low) quota, plus which levels get an event template.
type CatSpec = ((u64, u64, u64), [bool; 3]);

fn arb_categories() -> impl Strategy<Value = Vec<CatSpec>> {
    prop::collection::vec(((0u64..25, 0u64..25, 0u64..25), prop::array::uniform3(any::<bool>())), 1..5)
}

fn inputs(cats: &[CatSpec]) -> (CorpusManifest, Vec<Template>, Vec<MselEvent>) {
    let mut specs = Vec::new();
    let mut templates = Vec::new();
    let mut msel = Vec::new();
    for (i, ((h, m, l), event_levels)) in cats.iter().enumerate() {
        let name = format!("cat{i}");
        specs.push(CategorySpec::new(&name, h + m + l, *h, *m, *l));
        let generic = format!("(Update / News) on topic{i} (downtown / uptown)");
        templates.push(Template::parse(format!("g{i}"), &name, VisibilityLevel::Medium, &generic).unwrap());
        for (j, on) in event_levels.iter().enumerate() {
            if !on {
                continue;
            }
            let ev = format!("e{i}_{j}");
            let body = format!("(Alert / Warning) near station{i} #tag{i}x{j}");
            let mut t = Template::parse(format!("t{i}_{j}"), &name, LEVELS[j], &body).unwrap();
            t.msel_event = Some(ev.clone());
            templates.push(t);
            msel.push(MselEvent {
                id: ev,
                scenario_time: 50.0 + 90.0 * (i * 3 + j) as f64,
                description: String::new(),
                template_refs: vec![],
            });
        }
    }
    msel.sort_by(|a, b| a.scenario_time.total_cmp(&b.scenario_time));
    (manifest(specs, 2_000.0), templates, msel)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn compiled_plans_keep_invariants(cats in arb_categories(), seed in any::<u64>()) {
        let (m, templates, msel) = inputs(&cats);
        let policy = VolumePolicy::default();
        let bg = background(800);
        let (plan, report) = compile_plan(&m, &templates, &msel, &bg, &policy, seed).unwrap();
        plan.validate().unwrap();

        // Per-category counts by visibility reproduce the quota.
        for spec in &m.categories {
            let mut got = PerVisibility::new(0u64, 0, 0);
            for sm in plan.messages.iter().filter(|s| s.payload.category.as_deref() == Some(spec.name.as_str())) {
                *got.get_mut(sm.payload.visibility) += 1;
            }
            prop_assert_eq!(got, spec.quota(), "{}", spec.name);
        }

        // Non-decreasing, so a stable re-sort changes nothing.
        let mut sorted = plan.messages.clone();
        sorted.sort_by(|a, b| a.emit_time.total_cmp(&b.emit_time));
        prop_assert_eq!(&sorted, &plan.messages);

        // Every retweet_of points at an earlier message.
        let mut seen = HashSet::new();
        for sm in &plan.messages {
            if let Some(p) = sm.payload.retweet_of {
                prop_assert!(seen.contains(&p));
            }
            seen.insert(sm.payload.id);
        }

        // Event messages sit inside their burst window.
        let times: HashMap<&str, f64> = msel.iter().map(|e| (e.id.as_str(), e.scenario_time)).collect();
        for sm in plan.messages.iter().filter(|s| s.payload.source == SourceClass::ConstructedMsel) {
            let tag = sm.payload.hashtags[0].trim_start_matches("#tag").to_string();
            let (i, j) = tag.split_once('x').unwrap();
            let t0 = times[format!("e{i}_{j}").as_str()];
            prop_assert!(sm.emit_time >= t0 && sm.emit_time < t0 + policy.burst_window);
        }

        // Same inputs and seed, same bytes.
        let (again, _) = compile_plan(&m, &templates, &msel, &bg, &policy, seed).unwrap();
        prop_assert_eq!(plan.to_json(), again.to_json());

        // Composition agrees with the compile report and sums to one.
        let comp = composition_from_plan(&plan);
        prop_assert_eq!(comp.total as usize, report.total);
        let sum: f64 = comp.by_source.iter().map(|s| s.fraction).sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn volumes_ordered_for_any_policy(
        h in 0u64..5_000,
        k_med in 0.0f64..=1.0,
        k_low in 0.0f64..=1.0,
        min_volume in 0u64..20,
    ) {
        let p = VolumePolicy { k_med, k_low, min_volume, ..VolumePolicy::default() };
        let v = visibility_volumes(h, &p);
        prop_assert_eq!(v.high, h);
        prop_assert!(v.low <= v.medium && v.medium <= v.high);
        if h > 0 {
            prop_assert!(v.medium >= min_volume.min(h));
            prop_assert!(v.medium <= ((k_med * h as f64) + 1e-9).floor().max(min_volume as f64) as u64);
        }
    }

    #[test]
    fn burst_and_ghost_times_bounded(
        t0 in 0.0f64..10_000.0,
        n in 0usize..200,
        w in 1.0f64..900.0,
        seed in any::<u64>(),
        level in 0usize..3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let times = schedule_burst(t0, n, w, &mut rng);
        prop_assert_eq!(times.len(), n);
        prop_assert!(times.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(times.iter().all(|t| *t >= t0 && *t < t0 + w));

        let policy = GhostRetweetPolicy::default();
        let ghosts: Vec<Account> = (0..12)
            .map(|i| Account { handle: format!("g{i}"), kind: AccountKind::Ghost, visibility: VisibilityLevel::Low, profile_url: None })
            .collect();
        let vis = LEVELS[level];
        let parent = Microblog::from_draft(7, t0, "city", MicroblogDraft::new("Use Route 4 instead", vis, SourceClass::Authoritative)).unwrap();
        let mut ids = IdSequence::starting_at(8);
        let out = generate_ghost_retweets(&parent, &policy, &ghosts, &mut ids, &mut rng).unwrap();
        prop_assert_eq!(out.len() as u32, policy.count_by_visibility.get(vis));
        let d = policy.duration_by_visibility.get(vis);
        for r in &out {
            prop_assert!(r.emit_time >= t0 && r.emit_time < t0 + d);
            prop_assert_eq!(r.payload.retweet_of, Some(7));
        }
    }

    #[test]
    fn window_bookkeeping(steps in prop::collection::vec((0u32..50, 0usize..6, 1usize..3), 1..300)) {
        let words = ["#alpha", "#beta", "#gamma", "shelter", "radiation", "highway"];
        let mut w = TopicWindow::new(120.0);
        let mut t = 0.0;
        let mut seen: Vec<(f64, usize)> = Vec::new();
        for (gap, first, n) in steps {
            t += gap as f64;
            let text: Vec<&str> = (0..n).map(|k| words[(first + k) % words.len()]).collect();
            w.observe(t, &text.join(" ")).unwrap();
            seen.push((t, n));
            let inside: usize = seen.iter().filter(|(st, _)| *st > t - 120.0 && *st <= t).map(|(_, n)| n).sum();
            prop_assert_eq!(w.len(), inside);
            if !w.is_empty() {
                prop_assert_eq!(w.topmost_count(), w.top_k(1)[0].count);
            }
        }
    }

    #[test]
    fn same_seed_same_authors(seed in any::<u64>()) {
        let pool: Vec<String> = (0..30).map(|i| format!("p{i}")).collect();
        let draw = |s: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            (0..50)
                .map(|i| {
                    let d = MicroblogDraft::new("hello there", VisibilityLevel::Low, SourceClass::Background);
                    assign_author(d, i + 1, 0.0, &pool, &mut rng).unwrap().author
                })
                .collect::<Vec<_>>()
        };
        prop_assert_eq!(draw(seed), draw(seed));
    }
}

fn entry(seq: u64, kind: EventKind, author: &str, retweet_of: Option<u64>) -> EventLogEntry {
    let source = match kind {
        EventKind::Emitted => SourceClass::Background,
        EventKind::GhostRetweet => SourceClass::GhostRetweet,
        EventKind::Injected => SourceClass::ControllerInjection,
        _ => SourceClass::Authoritative,
    };
    let mut d = MicroblogDraft::new(format!("entry {seq}"), VisibilityLevel::Low, source);
    d.retweet_of = retweet_of;
    EventLogEntry {
        seq,
        wall_time: 0,
        scenario_time: seq as f64,
        kind,
        message: Microblog::from_draft(seq, seq as f64, author, d).unwrap(),
    }
}

proptest! {
    #[test]
    fn network_weight_conservation(
        ops in prop::collection::vec((0usize..5, 0usize..4, any::<prop::sample::Index>(), any::<bool>()), 1..120)
    ) {
        let authors = ["city", "county", "redcross", "ghost1"];
        let kinds = [EventKind::Emitted, EventKind::Posted, EventKind::Retweeted, EventKind::Injected, EventKind::GhostRetweet];
        let mut log: Vec<EventLogEntry> = Vec::new();
        let mut dangling_ids = 0;
        for (k, a, target, dangle) in ops {
            let seq = log.len() as u64 + 1;
            let kind = kinds[k];
            let is_rt = matches!(kind, EventKind::Retweeted | EventKind::GhostRetweet);
            let parent = if !is_rt {
                None
            } else if dangle || log.is_empty() {
                dangling_ids += 1;
                Some(0)
            } else {
                Some(log[target.index(log.len())].message.id)
            };
            log.push(entry(seq, kind, authors[a], parent));
        }
        let net = build_retweet_network(&log, false);
        let resolvable = log
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Retweeted | EventKind::GhostRetweet))
            .filter(|e| e.message.retweet_of.is_some_and(|p| p >= 1))
            .count() as u64;
        let weights: u64 = net.edges.iter().chain(&net.self_edges).map(|e| e.weight).sum();
        prop_assert_eq!(weights, resolvable);
        prop_assert_eq!(net.dangling.len(), dangling_ids);
        prop_assert!(net.edges.iter().all(|e| e.from != e.to && e.weight >= 1));

        let humans = build_retweet_network(&log, true);
        let human_rts = log
            .iter()
            .filter(|e| e.kind == EventKind::Retweeted && e.message.retweet_of.is_some_and(|p| p >= 1))
            .count() as u64;
        prop_assert_eq!(humans.edges.iter().chain(&humans.self_edges).map(|e| e.weight).sum::<u64>(), human_rts);

        // Pure functions of the log.
        prop_assert_eq!(build_retweet_network(&log, false), net);
        let comp = composition_from_log(&log, None);
        prop_assert_eq!(serde_json::to_string(&comp).unwrap(), serde_json::to_string(&composition_from_log(&log, None)).unwrap());
        let sum: f64 = comp.by_source.iter().map(|s| s.fraction).sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert_eq!(engagement_report(&log), engagement_report(&log));
    }
}
