//! The museum-visit scenario used across tests, docs and demos.
//!
//! Maya spends one hour in Gallery 760 of the Metropolitan Museum of Art in
//! front of Leutze's *Washington Crossing the Delaware*, receives one
//! provocation, and shifts from descriptive to interpretive language. Months
//! later she visits the Lincoln Memorial, where the earlier capture resurfaces.

use alloc::string::String;
use alloc::vec::Vec;

use crate::embed::DEFAULT_DIM;
use crate::geo::{GeoPoint, Geofence};
use crate::model::{CardInput, CardKind, Session};
use crate::provoke::{Provocation, Vocabulary};
use crate::time::Timestamp;

pub const LEARNER: &str = "maya";
pub const MET_SESSION: &str = "met-760";
pub const LINCOLN_SESSION: &str = "lincoln-memorial";

pub const MET_WASHINGTON_CARD: &str = "met-760-0000";
pub const MET_ICE_CARD: &str = "met-760-0002";
pub const MET_PROVOCATION_CARD: &str = "met-760-0003";
pub const LINCOLN_CARD: &str = "lincoln-memorial-0000";
pub const LINCOLN_PROVOCATION_CARD: &str = "lincoln-memorial-0001";

/// The intervention after the flag and ice note.
pub const MET_PROVOCATION: &str = "You described the light as 'pulling' Washington forward. What evidence from the physical composition supports the idea that this painting was meant to construct a hero, not merely depict a crossing?";

/// The intervention at the Lincoln Memorial.
pub const LINCOLN_PROVOCATION: &str = "You previously observed how a painting uses light and posture to make one person look inevitable. How does this architectural composition achieve a similar effect?";

pub const DECLARATIVE_CONTROL: &str = "The answer is that Leutze painted it in 1851.";

/// Center of the Met, used as the session geofence center.
pub fn met_center() -> GeoPoint {
    GeoPoint { lat: 40.7794, lon: -73.9632 }
}

/// Where Maya stands in Gallery 760.
pub fn met_gallery_760() -> GeoPoint {
    GeoPoint { lat: 40.77945, lon: -73.96325 }
}

pub fn lincoln_memorial() -> GeoPoint {
    GeoPoint { lat: 38.8893, lon: -77.0502 }
}

struct Step {
    offset_secs: i64,
    dlat: f64,
    dlon: f64,
    kind: CardKind,
    text: &'static str,
}

const MET_START: &str = "2025-10-04T14:00:00Z";

const MET_STEPS: [Step; 9] = [
    Step {
        offset_secs: 0,
        dlat: 0.0,
        dlon: 0.0,
        kind: CardKind::Capture,
        text: "Washington is the only figure standing -- everyone else is crouched or rowing. And the light hits him from the far shore, like it's pulling him forward. Is the whole composition built to make one person look inevitable?",
    },
    Step {
        offset_secs: 4 * 60,
        dlat: 0.00002,
        dlon: 0.00003,
        kind: CardKind::Capture,
        text: "The soldiers crouch low at the oars and lean into the river. The boat is crowded, grey, cold, everyone bent over except him, standing in the light.",
    },
    Step {
        offset_secs: 8 * 60,
        dlat: 0.00003,
        dlon: -0.00002,
        kind: CardKind::Capture,
        text: "The flag is at the center but almost lost in the storm. And the ice chunks look more theatrical than real. Real ice would not stack up like that, and the light on it is too bright.",
    },
    Step {
        offset_secs: 8 * 60 + 40,
        dlat: 0.00003,
        dlon: -0.00002,
        kind: CardKind::Provocation,
        text: MET_PROVOCATION,
    },
    Step {
        offset_secs: 12 * 60,
        dlat: 0.00001,
        dlon: 0.00001,
        kind: CardKind::Response,
        text: "The evidence is the soldiers: they crouch low at the oars, bent over, so he is the only one upright. That is constructed heroism.",
    },
    Step {
        offset_secs: 20 * 60,
        dlat: -0.00002,
        dlon: 0.00002,
        kind: CardKind::Capture,
        text: "The painting uses posture and composition to make one person inevitable. It is visual rhetoric, almost propaganda.",
    },
    Step {
        offset_secs: 34 * 60,
        dlat: -0.00001,
        dlon: 0.0,
        kind: CardKind::Capture,
        text: "Constructed heroism again: visual rhetoric painted for a nation that wanted a symbol. Propaganda, but beautiful propaganda.",
    },
    Step {
        offset_secs: 47 * 60,
        dlat: 0.0,
        dlon: 0.00001,
        kind: CardKind::Capture,
        text: "Visual rhetoric and constructed heroism, painted as propaganda for a nation that wanted a symbol.",
    },
    Step {
        offset_secs: 60 * 60,
        dlat: 0.00001,
        dlon: 0.0,
        kind: CardKind::Capture,
        text: "Constructed heroism, visual rhetoric, propaganda: a symbol painted for a nation, not a record of a crossing.",
    },
];

const LINCOLN_START: &str = "2026-02-14T16:00:00Z";

const LINCOLN_STEPS: [Step; 3] = [
    Step {
        offset_secs: 0,
        dlat: 0.0,
        dlon: 0.0,
        kind: CardKind::Capture,
        text: "Lincoln is the only figure here, seated and massive, and from below the light hits him like a stage. Is this whole place built to make one person look inevitable too?",
    },
    Step {
        offset_secs: 45,
        dlat: 0.0,
        dlon: 0.0,
        kind: CardKind::Provocation,
        text: LINCOLN_PROVOCATION,
    },
    Step {
        offset_secs: 4 * 60,
        dlat: 0.00003,
        dlon: 0.00002,
        kind: CardKind::Response,
        text: "The columns and the steps make you look up from below, so the seated figure feels above everyone. Constructed heroism in stone.",
    },
];

fn build(
    id: &str,
    title: &str,
    fence: Geofence,
    start: &str,
    base: GeoPoint,
    steps: &[Step],
) -> Session {
    let start = Timestamp::parse(start).expect("fixture timestamp");
    let mut s = Session::create(id, LEARNER, title, Some(fence), DEFAULT_DIM).expect("fixture session");
    for step in steps {
        let ts = start.plus_seconds(step.offset_secs);
        let geo = GeoPoint {
            lat: base.lat + step.dlat,
            lon: base.lon + step.dlon,
        };
        if step.kind == CardKind::Provocation {
            let trigger = s.cards().last().expect("provocation follows a capture").id.clone();
            let vocab = Vocabulary::from_cards(s.cards());
            let p = Provocation::from_candidate(step.text, trigger, None, &vocab)
                .expect("fixture provocation passes the gate");
            s.append_provocation(&p, ts, geo).expect("fixture provocation");
        } else {
            s.append_card(CardInput {
                ts,
                geo,
                photo_ref: alloc::format!("photos/{id}/{:02}.jpg", s.len()),
                voice_text: String::from(step.text),
                kind: step.kind,
            })
            .expect("fixture card");
        }
    }
    s
}

/// Maya's one-hour Gallery 760 session, including the provocation.
pub fn maya_met_session() -> Session {
    build(
        MET_SESSION,
        "American Wing, Gallery 760",
        Geofence {
            center: met_center(),
            radius_m: 200.0,
        },
        MET_START,
        met_gallery_760(),
        &MET_STEPS,
    )
}

/// Maya's Lincoln Memorial visit, months later.
///
/// The provocation card here was vetted against Maya's vocabulary from both
/// visits; its trigger is the first Lincoln capture.
pub fn maya_lincoln_session() -> Session {
    let start = Timestamp::parse(LINCOLN_START).expect("fixture timestamp");
    let mut s = Session::create(
        LINCOLN_SESSION,
        LEARNER,
        "Lincoln Memorial",
        Some(Geofence {
            center: lincoln_memorial(),
            radius_m: 150.0,
        }),
        DEFAULT_DIM,
    )
    .expect("fixture session");
    let met = maya_met_session();
    for step in &LINCOLN_STEPS {
        let ts = start.plus_seconds(step.offset_secs);
        let geo = GeoPoint {
            lat: lincoln_memorial().lat + step.dlat,
            lon: lincoln_memorial().lon + step.dlon,
        };
        if step.kind == CardKind::Provocation {
            let vocab = Vocabulary::from_cards(met.cards().iter().chain(s.cards()));
            let p = Provocation::from_candidate(
                step.text,
                LINCOLN_CARD,
                Some(String::from(MET_WASHINGTON_CARD)),
                &vocab,
            )
            .expect("fixture provocation passes the gate");
            s.append_provocation(&p, ts, geo).expect("fixture provocation");
        } else {
            s.append_card(CardInput {
                ts,
                geo,
                photo_ref: alloc::format!("photos/{LINCOLN_SESSION}/{:02}.jpg", s.len()),
                voice_text: String::from(step.text),
                kind: step.kind,
            })
            .expect("fixture card");
        }
    }
    s
}

/// Both sessions in chronological order.
pub fn maya_sessions() -> Vec<Session> {
    alloc::vec![maya_met_session(), maya_lincoln_session()]
}

/// Learner vocabulary of the Met session up to the provocation.
pub fn met_vocabulary_before_provocation() -> Vocabulary {
    let met = maya_met_session();
    let end = met
        .cards()
        .iter()
        .position(|c| c.id == MET_PROVOCATION_CARD)
        .expect("provocation card");
    Vocabulary::from_cards(&met.cards()[..end])
}

/// Learner vocabulary across both visits.
pub fn maya_vocabulary() -> Vocabulary {
    let sessions = maya_sessions();
    Vocabulary::from_cards(sessions.iter().flat_map(|s| s.cards()))
}
