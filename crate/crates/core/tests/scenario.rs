//! The Maya fixture end to end: gate, pivot, velocity, linking, authenticity.

use field_atlas_core::authline::{verify_session, verify_sessions, AuthParams, ViolationCode};
use field_atlas_core::etm::{build_trajectory, EtmParams};
use field_atlas_core::fixture::{self, *};
use field_atlas_core::model::{CardInput, CardKind, Session};
use field_atlas_core::provoke::{gate, generate_linked, generate_single, RuleCode, Vocabulary};
use field_atlas_core::semnet::{build_network, link_candidates, DEFAULT_K, DEFAULT_THRESHOLD};
use field_atlas_core::time::Timestamp;

fn failed(text: &str, vocab: &Vocabulary) -> Vec<RuleCode> {
    gate(text, vocab).failed_rules()
}

#[test]
fn verbatim_interventions_pass_and_control_fails() {
    assert!(gate(MET_PROVOCATION, &met_vocabulary_before_provocation()).passed);
    assert!(gate(LINCOLN_PROVOCATION, &maya_vocabulary()).passed);
    let rules = failed(DECLARATIVE_CONTROL, &maya_vocabulary());
    assert!(rules.contains(&RuleCode::R1) && rules.contains(&RuleCode::R2), "{rules:?}");
    // "answer", "leutze" and "1851" are not Maya's words either.
    assert!(rules.contains(&RuleCode::R4));
}

#[test]
fn pivot_follows_the_provocation() {
    let traj = build_trajectory(&maya_met_session(), &EtmParams::default()).unwrap();
    assert!(!traj.pivots.is_empty());
    assert!(traj
        .pivots
        .iter()
        .any(|p| p.attributed_provocation.as_deref() == Some(MET_PROVOCATION_CARD)));
    // The provocation is a timeline event, not a point.
    assert!(traj.points.iter().all(|p| p.card_id != MET_PROVOCATION_CARD));
    assert_eq!(traj.points.len(), 8);
}

#[test]
fn early_velocity_exceeds_late_velocity() {
    let traj = build_trajectory(&maya_met_session(), &EtmParams::default()).unwrap();
    let total = traj.duration_minutes();
    assert!((total - 60.0).abs() < 1e-9);
    let early = traj.mean_velocity_between(0.0, 15.0).unwrap();
    let late = traj.mean_velocity_between(total - 30.0, total).unwrap();
    assert!(early / late > 1.0, "early {early} late {late}");
}

#[test]
fn lincoln_links_back_to_washington() {
    let sessions = maya_sessions();
    let lincoln = sessions[1].card(LINCOLN_CARD).unwrap();
    let corpus: Vec<_> = sessions.iter().flat_map(|s| s.cards()).collect();
    let links = link_candidates(lincoln, corpus.iter().copied(), DEFAULT_THRESHOLD, Some(DEFAULT_K));
    let link = links.iter().find(|l| l.to_card == MET_WASHINGTON_CARD).expect("link to Washington");
    assert!(link.similarity >= DEFAULT_THRESHOLD && link.cross_session);
    assert_eq!(links[0].to_card, MET_WASHINGTON_CARD, "strongest link");

    let washington = sessions[0].card(MET_WASHINGTON_CARD).unwrap();
    let p = generate_linked(lincoln, washington).unwrap();
    assert!(p.gate().passed);
    assert_eq!(p.linked_card(), Some(MET_WASHINGTON_CARD));
    assert!(p.text().starts_with("You previously observed "));
    // Independent re-check against the union of both cards' tokens.
    let vocab = Vocabulary::from_texts([lincoln.voice_text.as_str(), washington.voice_text.as_str()]);
    assert!(gate(p.text(), &vocab).passed);
}

#[test]
fn every_template_output_passes_the_gate() {
    let sessions = maya_sessions();
    let caps: Vec<_> = sessions
        .iter()
        .flat_map(|s| s.cards())
        .filter(|c| c.kind == CardKind::Capture)
        .collect();
    let mut n = 0;
    for (i, c) in caps.iter().enumerate() {
        let p = generate_single(c).unwrap();
        assert!(gate(p.text(), &Vocabulary::from_texts([c.voice_text.as_str()])).passed, "{}", p.text());
        for prior in &caps[..i] {
            let p = generate_linked(c, prior).unwrap();
            let vocab = Vocabulary::from_texts([c.voice_text.as_str(), prior.voice_text.as_str()]);
            assert!(gate(p.text(), &vocab).passed, "{}", p.text());
            n += 1;
        }
    }
    assert!(n > 20);
}

#[test]
fn flag_note_provocation_echoes_ice() {
    let met = maya_met_session();
    let p = generate_single(met.card(MET_ICE_CARD).unwrap()).unwrap();
    // Hand count: "ice" and "real" both occur twice, everything else once.
    assert!(p.text().starts_with("You described 'ice' and 'real'."), "{}", p.text());
}

#[test]
fn semantic_network_of_the_fixture() {
    let sessions = maya_sessions();
    let links = build_network(sessions.iter().flat_map(|s| s.cards()), DEFAULT_THRESHOLD);
    assert!(links.iter().any(|l| l.from_card == LINCOLN_CARD && l.to_card == MET_WASHINGTON_CARD));
    assert!(links.iter().all(|l| l.similarity >= DEFAULT_THRESHOLD));
}

#[test]
fn pristine_fixture_is_authentic() {
    for report in verify_sessions(&maya_sessions(), &AuthParams::default()) {
        assert!(report.authentic, "{report:?}");
    }
}

#[test]
fn one_byte_tamper_is_a4() {
    let met = maya_met_session();
    let mut cards = met.cards().to_vec();
    let mut bytes = cards[4].voice_text.clone().into_bytes();
    bytes[0] ^= 0x01;
    cards[4].voice_text = String::from_utf8(bytes).unwrap();
    let tampered = Session::from_parts_unchecked(met.header().clone(), cards);
    let report = verify_session(&tampered, &AuthParams::default());
    assert!(!report.authentic);
    assert_eq!(report.codes(), vec![ViolationCode::A4]);
    assert!(report.violations[0].card_ids.contains(&met.cards()[4].id));
}

#[test]
fn same_session_jump_to_lincoln_is_a2() {
    let mut s = Session::create("jump", LEARNER, "jump", None, 32).unwrap();
    let t0 = Timestamp::parse("2025-10-04T14:00:00Z").unwrap();
    for (ts, geo) in [(t0, met_gallery_760()), (t0.plus_seconds(300), lincoln_memorial())] {
        s.append_card(CardInput {
            ts,
            geo,
            photo_ref: String::new(),
            voice_text: "the light on the figure".into(),
            kind: CardKind::Capture,
        })
        .unwrap();
    }
    let report = verify_session(&s, &AuthParams::default());
    assert_eq!(report.codes(), vec![ViolationCode::A2]);
}

#[test]
fn months_between_sessions_is_not_a_violation() {
    let sessions = maya_sessions();
    let gap = sessions[1].cards()[0].ts.seconds_since(&sessions[0].end_time().unwrap());
    assert!(gap > 90.0 * 86_400.0);
    assert!(verify_sessions(&sessions, &AuthParams::default()).iter().all(|r| r.authentic));
}

#[test]
fn fixture_is_deterministic() {
    assert_eq!(maya_met_session(), maya_met_session());
    assert_eq!(fixture::maya_lincoln_session().head_hash(), maya_lincoln_session().head_hash());
}
