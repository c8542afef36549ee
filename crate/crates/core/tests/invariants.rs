//! Cross-module property tests: randomized invariants that the incremental
//! tracker, the labeler, the metrics and the end-to-end pipeline must hold
//! for arbitrary inputs, not just the fixtures in the unit tests.

use std::collections::BTreeMap;

use cgnp_core::features::{assemble, FeatureSpec, FEATURE_NAMES};
use cgnp_core::graph::{FollowerGraph, GeographyTable};
use cgnp_core::ingest::TweetEvent;
use cgnp_core::labeling::{label, Label, LabelMode, TaskConfig};
use cgnp_core::ml::eval::{auc_pr, pr_curve, undersample};
use cgnp_core::ml::information_gain;
use cgnp_core::pipeline::{extract_features, load_corpus};
use cgnp_core::simgen::{generate_corpus, SimConfig};
use cgnp_core::tracker::{conductance_oracle, wcc_oracle, DiffusionState};
use proptest::collection::vec;
use proptest::prelude::*;

fn tweet(ts: i64, user: u32, hashtag: &str) -> TweetEvent {
    TweetEvent {
        ts,
        user,
        hashtag: hashtag.to_string(),
        is_retweet: false,
        rt_source: None,
        mention_targets: vec![],
        mention_raw: 0,
    }
}

prop_compose! {
    fn graph_and_adopters(max_nodes: usize)
        (n in 2..max_nodes)
        (edges in vec((0..n as u32, 0..n as u32), 0..3 * n),
         geo in vec(0u16..5, n),
         users in vec(0..n as u32, 1..120),
         n in Just(n))
        -> (FollowerGraph, Vec<u32>)
    {
        let g = FollowerGraph::from_parts(n, edges, geo, GeographyTable::new()).unwrap();
        (g, users)
    }
}

proptest! {
    /// The incrementally maintained cut/volume counters agree exactly with a
    /// from-scratch recount after every single event, and the component
    /// structure agrees with a BFS recount.
    #[test]
    fn tracker_matches_oracles_after_every_event((g, users) in graph_and_adopters(80)) {
        let mut state = DiffusionState::new("t");
        for (i, &u) in users.iter().enumerate() {
            state.apply_event(&tweet(i as i64, u, "t"), &g).unwrap();
            let cv = conductance_oracle(state.adopters(), &g);
            prop_assert_eq!(state.cut_edges, cv.cut);
            prop_assert_eq!(state.volume, cv.volume);
            let (count, largest, second) = wcc_oracle(state.adopters(), &g);
            prop_assert_eq!(state.wcc.component_count(), count);
            prop_assert_eq!(state.wcc.top_two_sizes(), (largest, second));
        }
    }

    /// Conductance is non-negative and finite, and the feature snapshot never
    /// produces NaN or infinity for any replay long enough to assemble.
    #[test]
    fn features_always_finite((g, users) in graph_and_adopters(60)) {
        let mut state = DiffusionState::new("t");
        for (i, &u) in users.iter().enumerate() {
            state.apply_event(&tweet(i as i64 * 3, u, "t"), &g).unwrap();
            let c = state.conductance();
            prop_assert!(c.is_finite() && c >= 0.0);
        }
        let fv = assemble(&state, &g, &FeatureSpec::default()).unwrap();
        prop_assert_eq!(fv.values.len(), FEATURE_NAMES.len());
        prop_assert!(fv.values.iter().all(|v| v.is_finite()));
    }

    /// In absolute mode a hashtag's label is monotone in its own tweet total
    /// and independent of every other hashtag.
    #[test]
    fn absolute_labels_are_monotone(
        totals in vec(0u64..30_000, 1..40),
        bump in 1u64..20_000,
        pick in any::<prop::sample::Index>(),
    ) {
        let cfg = TaskConfig { n: 1500, m: 10_000, mode: LabelMode::Absolute, percentile_k: 10.0 };
        let map: BTreeMap<String, u64> = totals.iter().enumerate()
            .map(|(i, &t)| (format!("h{i}"), t))
            .collect();
        let before = label(&map, &cfg).unwrap();
        let key = format!("h{}", pick.index(totals.len()));
        let mut bumped = map.clone();
        *bumped.get_mut(&key).unwrap() += bump;
        let after = label(&bumped, &cfg).unwrap();
        let rank = |l: Label| match l {
            Label::Ineligible => 0,
            Label::NonViral => 1,
            Label::Viral => 2,
        };
        prop_assert!(rank(after[&key]) >= rank(before[&key]));
        for (tag, l) in &before {
            if tag != &key {
                prop_assert_eq!(after[tag], *l);
            }
        }
    }

    /// Equal-frequency binning makes information gain invariant under any
    /// strictly increasing transform of the feature.
    #[test]
    fn information_gain_is_monotone_invariant(
        pairs in vec((0.0f64..100.0, any::<bool>()), 8..200),
        bins in 2usize..12,
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let g1 = information_gain(&x, &y, bins).unwrap();
        let tx: Vec<f64> = x.iter().map(|v| (v * 0.13).exp() + 3.0 * v).collect();
        let g2 = information_gain(&tx, &y, bins).unwrap();
        prop_assert!((g1 - g2).abs() < 1e-9, "{g1} vs {g2}");
    }

    /// PR curves are well-formed: thetas strictly descending, precision and
    /// recall in [0,1], recall non-decreasing, final recall 1; the area is a
    /// probability.
    #[test]
    fn pr_curve_is_well_formed(scores in vec((0.0f64..1.0, any::<bool>()), 1..300)) {
        let curve = pr_curve(&scores);
        if scores.iter().filter(|&&(_, y)| y).count() == 0 {
            prop_assert!(curve.is_empty());
            return Ok(());
        }
        for w in curve.windows(2) {
            prop_assert!(w[0].theta > w[1].theta);
            prop_assert!(w[0].recall <= w[1].recall);
        }
        for p in &curve {
            prop_assert!((0.0..=1.0).contains(&p.precision));
            prop_assert!((0.0..=1.0).contains(&p.recall));
        }
        prop_assert_eq!(curve.last().unwrap().recall, 1.0);
        let auc = auc_pr(&curve);
        prop_assert!((0.0..=1.0).contains(&auc));
    }

    /// Undersampling keeps every positive, keeps order, and at rate 1.0 is
    /// the identity.
    #[test]
    fn undersample_keeps_positives(
        labels in vec(any::<bool>(), 1..200),
        rate in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        let indices: Vec<usize> = (0..labels.len()).collect();
        let kept = undersample(&indices, &labels, rate, seed).unwrap();
        let positives: Vec<usize> = indices.iter().copied().filter(|&i| labels[i]).collect();
        let kept_pos: Vec<usize> = kept.iter().copied().filter(|&i| labels[i]).collect();
        prop_assert_eq!(kept_pos, positives);
        prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
        let all = undersample(&indices, &labels, 1.0, seed).unwrap();
        prop_assert_eq!(all, indices);
    }
}

/// End-to-end conservation: a strict-mode load of a generated corpus drops
/// nothing, and every hashtag ends up exactly once as either an eligible
/// feature row or an ineligible record.
#[test]
fn pipeline_accounts_for_every_hashtag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig {
        nodes: 1500,
        hashtags: 60,
        seed: 41,
        ..SimConfig::default()
    };
    let summary = generate_corpus(&cfg, dir.path()).unwrap();
    let loaded = load_corpus(
        &dir.path().join("edges.txt"),
        &dir.path().join("geo.txt"),
        &dir.path().join("events.jsonl"),
        true,
        12,
        5,
    )
    .unwrap();
    assert_eq!(loaded.stats.dropped_unknown_user, 0);
    assert_eq!(loaded.stats.malformed_skipped, 0);
    assert_eq!(
        loaded.streams.len() + loaded.excluded_hashtags,
        loaded.total_hashtags
    );
    assert_eq!(loaded.total_hashtags, summary.hashtags);
    let n = 200;
    let ex = extract_features(&loaded.graph, &loaded.streams, n, &FeatureSpec::default()).unwrap();
    assert_eq!(ex.eligible.len() + ex.ineligible.len(), loaded.streams.len());
    for (tag, total, fv) in &ex.eligible {
        assert!(loaded.streams[tag].len() >= n);
        assert_eq!(*total, loaded.streams[tag].len() as u64);
        assert_eq!(fv.values.len(), FEATURE_NAMES.len());
    }
    for (tag, _) in &ex.ineligible {
        assert!(loaded.streams[tag].len() < n);
    }
}
