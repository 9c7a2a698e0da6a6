use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;
use stimstream_core::corpus::{
    BoundingBox, CorpusManifest, GeoPoint, Microblog, MicroblogDraft, SourceClass, VisibilityLevel,
};
use stimstream_core::eventlog::EventKind;
use stimstream_core::scheduler::{SchedulePlan, ScheduledMessage, VolumePolicy};
use stimstream_server::{Engine, Roster};

fn plan(times: &[f64]) -> SchedulePlan {
    let messages = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let d = MicroblogDraft::new(
                format!("scheduled {i} #daytonbomb"),
                VisibilityLevel::Low,
                SourceClass::Background,
            );
            ScheduledMessage { emit_time: t, payload: Microblog::from_draft(i as u64 + 1, t, "resident", d).unwrap() }
        })
        .collect();
    SchedulePlan {
        seed: 0,
        policy: VolumePolicy::default(),
        manifest: CorpusManifest {
            categories: vec![],
            background_fraction_target: 0.76,
            username_pool: vec!["anon_a".into(), "anon_b".into()],
            bbox: BoundingBox::new(GeoPoint::new(39.0, -85.0).unwrap(), GeoPoint::new(40.0, -84.0).unwrap()).unwrap(),
            exercise_span: 1000.0,
        },
        messages,
    }
}

#[derive(Debug, Clone)]
enum Action {
    Post(usize),
    Retweet(prop::sample::Index),
    Inject(usize),
}

fn action() -> impl Strategy<Value = (f64, Action)> {
    let a = prop_oneof![
        (0usize..6).prop_map(Action::Post),
        any::<prop::sample::Index>().prop_map(Action::Retweet),
        (0usize..3).prop_map(Action::Inject),
    ];
    (0.0f64..40.0, a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn live_actions_interleave_without_reordering(
        mut times in prop::collection::vec(0.0f64..800.0, 0..80),
        actions in prop::collection::vec(action(), 0..25),
    ) {
        times.sort_by(f64::total_cmp);
        let p = plan(&times);
        let roster = Roster::example(12);
        let mut e = Engine::new(Arc::new(p.clone()), &roster, 1).unwrap();
        let pios = ["city", "county", "redcross", "hospital", "fire", "health"];
        let levels = [VisibilityLevel::High, VisibilityLevel::Medium, VisibilityLevel::Low];
        let mut now = 0.0;
        let mut parents: HashMap<u64, VisibilityLevel> = HashMap::new();
        for (gap, a) in actions {
            now += gap;
            match a {
                Action::Post(i) => {
                    let acct = e.profile(pios[i]).unwrap().clone();
                    let entry = e.post(now, &acct, "Stay indoors near the arena", None).unwrap();
                    parents.insert(entry.message.id, acct.visibility);
                }
                Action::Retweet(ix) => {
                    if e.entries().is_empty() {
                        continue;
                    }
                    let target = e.entries()[ix.index(e.entries().len())].message.id;
                    let acct = e.profile("county").unwrap().clone();
                    let entry = e.retweet(now, &acct, target).unwrap();
                    prop_assert_eq!(entry.message.retweet_of, Some(target));
                }
                Action::Inject(l) => {
                    let entry = e.inject(now, "is the water safe??", levels[l], None).unwrap();
                    parents.insert(entry.message.id, levels[l]);
                }
            }
        }
        e.flush(now + 2_000.0).unwrap();
        prop_assert!(e.is_idle());
        let log = e.entries();

        for (i, entry) in log.iter().enumerate() {
            prop_assert_eq!(entry.seq, i as u64 + 1);
        }
        let emitted: Vec<&Microblog> = log.iter().filter(|x| x.kind == EventKind::Emitted).map(|x| &x.message).collect();
        prop_assert_eq!(emitted.len(), p.messages.len());
        for (got, want) in emitted.iter().zip(&p.messages) {
            prop_assert_eq!(*got, &want.payload);
        }
        let policy = &p.policy.retweet_policy;
        let mut children: HashMap<u64, u32> = HashMap::new();
        for x in log.iter().filter(|x| x.kind == EventKind::GhostRetweet) {
            *children.entry(x.message.retweet_of.unwrap()).or_insert(0) += 1;
        }
        for (id, vis) in &parents {
            prop_assert_eq!(children.get(id).copied().unwrap_or(0), policy.count_by_visibility.get(*vis));
        }
        prop_assert!(children.keys().all(|id| parents.contains_key(id)));
        let mut ids: Vec<u64> = log.iter().map(|x| x.message.id).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), log.len());
    }
}
