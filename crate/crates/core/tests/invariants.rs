use field_atlas_core::embed::embed_text;
use field_atlas_core::etm::{
    build_trajectory, compare_frechet, find_turns, reduce, velocity_series, EtmParams, PivotParams, VelocityParams,
};
use field_atlas_core::fixture;
use field_atlas_core::model::{CardInput, CardKind, DataCard, Session};
use field_atlas_core::semnet::{build_network, SemanticNetwork};
use field_atlas_core::time::Timestamp;
use field_atlas_oracles as oracle;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const WORDS: [&str; 12] = [
    "light", "ice", "flag", "soldiers", "posture", "hero", "storm", "river", "marble", "column", "figure", "boat",
];

fn times(n: usize, step_secs: i64) -> Vec<Timestamp> {
    (0..n)
        .map(|i| Timestamp::from_unix_seconds(1_760_000_000 + i as i64 * step_secs).unwrap())
        .collect()
}

/// Two sessions of one learner with random texts drawn from a small vocabulary.
fn corpus(seed: u64, per_session: usize) -> Vec<DataCard> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (s, start) in [("s-a", 1_700_000_000i64), ("s-b", 1_720_000_000)] {
        let mut session = Session::create(s, "learner", "t", None, 32).unwrap();
        for i in 0..per_session {
            let text: Vec<&str> = (0..rng.random_range(2..5))
                .map(|_| WORDS[rng.random_range(0..WORDS.len())])
                .collect();
            session
                .append_card(CardInput {
                    ts: Timestamp::from_unix_seconds(start + 60 * i as i64).unwrap(),
                    geo: fixture::met_gallery_760(),
                    photo_ref: String::new(),
                    voice_text: text.join(" "),
                    kind: if rng.random_bool(0.8) { CardKind::Capture } else { CardKind::Response },
                })
                .unwrap();
        }
        out.extend(session.cards().iter().cloned());
    }
    out
}

fn as_oracle(cards: &[DataCard]) -> Vec<oracle::LinkCard> {
    cards
        .iter()
        .map(|c| oracle::LinkCard {
            id: c.id.clone(),
            session: c.session_id.clone(),
            t: c.ts.unix_seconds(),
            capture: c.kind == CardKind::Capture,
            embedding: c.embedding.values().to_vec(),
        })
        .collect()
}

fn link_set(links: &[field_atlas_core::SemanticLink]) -> Vec<(String, String, bool)> {
    let mut v: Vec<_> = links
        .iter()
        .map(|l| (l.from_card.clone(), l.to_card.clone(), l.cross_session))
        .collect();
    v.sort();
    v
}

#[test]
fn network_matches_brute_force_on_ten_cards() {
    let mut total = 0;
    for seed in 0..20 {
        let cards = corpus(seed, 5);
        assert_eq!(cards.len(), 10);
        let batch = build_network(&cards, 0.35);
        assert_eq!(link_set(&batch), oracle::brute_links(&as_oracle(&cards), 0.35), "seed {seed}");

        let mut net = SemanticNetwork::new(0.35);
        for c in &cards {
            net.insert(c);
        }
        assert_eq!(net.links(), &batch[..], "seed {seed}");
        total += batch.len();
    }
    assert!(total > 20, "corpora too sparse to exercise linking: {total}");
}

#[test]
fn velocity_is_rotation_invariant() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0010);
    for _ in 0..20 {
        let d = 16;
        let q = oracle::random_orthogonal(d, &mut rng);
        let pts: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let rotated: Vec<Vec<f64>> = pts.iter().map(|p| oracle::mat_vec(&q, p)).collect();
        let t = times(8, 90);
        let a = velocity_series(&pts, &t, &VelocityParams::default()).unwrap();
        let b = velocity_series(&rotated, &t, &VelocityParams::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }
}

#[test]
fn reduce_is_centered() {
    let traj = build_trajectory(&fixture::maya_met_session(), &EtmParams::default()).unwrap();
    let xy = traj.xy();
    let n = xy.len() as f64;
    let cx: f64 = xy.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy: f64 = xy.iter().map(|p| p[1]).sum::<f64>() / n;
    assert!(cx.abs() < 1e-12 && cy.abs() < 1e-12);
}

#[test]
fn frechet_is_a_metric_on_fixture_paths() {
    let met = build_trajectory(&fixture::maya_met_session(), &EtmParams::default()).unwrap().xy();
    let lin = build_trajectory(&fixture::maya_lincoln_session(), &EtmParams::default()).unwrap().xy();
    let mid: Vec<[f64; 2]> = met.iter().map(|p| [p[0] * 0.5, p[1] + 0.1]).collect();
    let d = |a: &[[f64; 2]], b: &[[f64; 2]]| compare_frechet(a, b).unwrap();
    assert_eq!(d(&met, &met), 0.0);
    assert_eq!(d(&met, &lin), d(&lin, &met));
    assert!(d(&met, &lin) <= d(&met, &mid) + d(&mid, &lin) + 1e-12);
}

fn embedding_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (3usize..10).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 12), n))
}

proptest! {
    #[test]
    fn pivots_survive_translation(pts in embedding_strategy(), shift in prop::collection::vec(-10.0f64..10.0, 12)) {
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
        let params = PivotParams::default();
        let a: Vec<usize> = find_turns(&pts, &params).iter().map(|t| t.index).collect();
        let b: Vec<usize> = find_turns(&moved, &params).iter().map(|t| t.index).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn reduce_centroid_is_origin(pts in embedding_strategy()) {
        let xy = reduce(&pts);
        let n = xy.len() as f64;
        for k in 0..2 {
            let c: f64 = xy.iter().map(|p| p[k]).sum::<f64>() / n;
            prop_assert!(c.abs() < 1e-9);
        }
    }

    #[test]
    fn raising_threshold_never_adds_links(seed in 0u64..1000, lo in 0.0f64..0.9, bump in 0.0f64..0.5) {
        let cards = corpus(seed, 6);
        let low = link_set(&build_network(&cards, lo));
        let high = link_set(&build_network(&cards, lo + bump));
        prop_assert!(high.iter().all(|l| low.contains(l)));
    }

    #[test]
    fn frechet_symmetric(a in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..8),
                         b in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..8)) {
        let a: Vec<[f64; 2]> = a.into_iter().map(|(x, y)| [x, y]).collect();
        let b: Vec<[f64; 2]> = b.into_iter().map(|(x, y)| [x, y]).collect();
        prop_assert_eq!(compare_frechet(&a, &b).unwrap(), compare_frechet(&b, &a).unwrap());
    }

    #[test]
    fn embedding_cosine_in_range(a in "[a-z ]{0,40}", b in "[a-z ]{0,40}") {
        let x = embed_text(&a, 64).unwrap();
        let y = embed_text(&b, 64).unwrap();
        let c = field_atlas_core::cosine(&x, &y).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
    }
}
