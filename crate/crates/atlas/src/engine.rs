//! Operations shared by `atlasd` and the `atlas` CLI.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use field_atlas_core::authline::{verify_session, AuthenticityReport};
use field_atlas_core::etm::{build_trajectory, EpistemicTrajectory};
use field_atlas_core::geo::{GeoPoint, Geofence};
use field_atlas_core::model::{CardInput, CardKind, DataCard, Session};
use field_atlas_core::provoke::{gate, generate_linked, generate_single, GateVerdict, Provocation, Vocabulary};
use field_atlas_core::semnet::{build_network, link_candidates, SemanticLink};
use field_atlas_core::time::Timestamp;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::config::{PolicyMode, ServiceConfig};
use crate::error::{AtlasError, Result};
use crate::format::{PivotRecord, TrajectoryRecord};
use crate::store::{Commit, IndexEntry, SessionState, Store};

/// Body of `POST /sessions`.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct NewSession {
    #[serde(default)]
    pub id: Option<String>,
    pub learner_id: String,
    pub title: String,
    #[serde(default)]
    pub geofence: Option<Geofence>,
    #[serde(default)]
    pub embed_dim: Option<usize>,
}

/// Body of `POST /sessions/{id}/cards`, and one line of an `atlas ingest` file.
#[derive(Debug, Clone, Deserialize)]
pub struct CardRequest {
    pub ts: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub photo_ref: String,
    pub voice_text: String,
    #[serde(default = "default_kind")]
    pub kind: CardKind,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

fn default_kind() -> CardKind {
    CardKind::Capture
}

impl CardRequest {
    fn to_input(&self) -> Result<CardInput> {
        if self.kind == CardKind::Provocation {
            return Err(field_atlas_core::Error::ProvocationNotGated.into());
        }
        Ok(CardInput {
            ts: Timestamp::parse(&self.ts)?,
            geo: GeoPoint::new(self.lat, self.lon)?,
            photo_ref: self.photo_ref.clone(),
            voice_text: self.voice_text.clone(),
            kind: self.kind,
        })
    }
}

/// A stored card with its position in the session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CardView {
    pub seq: usize,
    #[serde(flatten)]
    pub card: DataCard,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProvocationView {
    pub text: String,
    pub trigger_card: String,
    pub linked_card: Option<String>,
    pub gate: GateVerdict,
    pub card: CardView,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestOutcome {
    pub card: CardView,
    pub provocation: Option<ProvocationView>,
    pub links: Vec<SemanticLink>,
    /// True when an earlier ingest with the same idempotency key was returned.
    pub replayed: bool,
}

/// Server-push record for `/sessions/{id}/events`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Event {
    CardAppended {
        session_id: String,
        card: CardView,
    },
    ProvocationIssued {
        session_id: String,
        provocation: ProvocationView,
    },
    PivotDetected {
        session_id: String,
        pivot: PivotRecord,
    },
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::CardAppended { .. } => "card-appended",
            Event::ProvocationIssued { .. } => "provocation-issued",
            Event::PivotDetected { .. } => "pivot-detected",
        }
    }
}

const EVENT_BUFFER: usize = 256;

/// A provocation and the `(newer, older)` link it surfaces, if any.
type Chosen = (Provocation, Option<(String, String)>);

pub struct Engine {
    store: Store,
    config: ServiceConfig,
    channels: Mutex<HashMap<String, broadcast::Sender<Event>>>,
}

impl Engine {
    pub fn open(config: ServiceConfig) -> Result<Self> {
        config.validate()?;
        let store = Store::open(&config.data_dir)?;
        Ok(Engine {
            store,
            config,
            channels: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn create_session(&self, req: NewSession) -> Result<Arc<SessionState>> {
        let id = req.id.unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
        let session = Session::create(
            id,
            req.learner_id,
            req.title,
            req.geofence,
            req.embed_dim.unwrap_or(field_atlas_core::embed::DEFAULT_DIM),
        )?;
        self.store.insert_session(session)
    }

    /// Imports a complete session (already chain-verified).
    pub fn import_session(&self, session: Session) -> Result<Arc<SessionState>> {
        self.store.insert_session(session)
    }

    pub fn subscribe(&self, session_id: &str) -> Result<broadcast::Receiver<Event>> {
        self.store.snapshot(session_id)?;
        Ok(self.sender(session_id).subscribe())
    }

    fn sender(&self, session_id: &str) -> broadcast::Sender<Event> {
        self.channels
            .lock()
            .expect("channel lock poisoned")
            .entry(session_id.to_string())
            .or_insert_with(|| broadcast::channel(EVENT_BUFFER).0)
            .clone()
    }

    fn publish(&self, session_id: &str, event: Event) {
        // No subscribers is fine.
        let _ = self.sender(session_id).send(event);
    }

    /// Capture cards of the learner in every session except `skip`.
    fn learner_captures(&self, learner: &str, skip: &str) -> Vec<DataCard> {
        self.store
            .learner_snapshots(learner)
            .iter()
            .filter(|s| s.session.id() != skip)
            .flat_map(|s| s.session.cards().iter().filter(|c| c.kind == CardKind::Capture).cloned())
            .collect()
    }

    fn learner_surfaced(&self, learner: &str) -> HashSet<(String, String)> {
        self.store
            .learner_snapshots(learner)
            .iter()
            .flat_map(|s| s.surfaced_pairs().cloned().collect::<Vec<_>>())
            .collect()
    }

    /// Appends a learner card, links it, provokes according to policy and
    /// persists everything before returning.
    pub fn ingest(&self, session_id: &str, req: CardRequest) -> Result<IngestOutcome> {
        let input = req.to_input()?;
        let before = self.store.snapshot(session_id)?;
        let learner = before.session.learner_id().to_string();
        let others = self.learner_captures(&learner, session_id);
        let surfaced = self.learner_surfaced(&learner);
        let cfg = &self.config;

        let outcome = self.store.commit(session_id, |state| {
            if let Some(key) = &req.idempotency_key {
                if let Some(entry) = state.by_idempotency_key(key) {
                    return Ok(Err(replay(&self.store, state, entry)?));
                }
            }
            let mut session = state.session.clone();
            let card = session.append_card(input)?.clone();
            let card_view = CardView {
                seq: session.len() - 1,
                card: card.clone(),
            };

            let mut links = Vec::new();
            let mut provocation: Option<Chosen> = None;
            if card.kind == CardKind::Capture {
                let own: Vec<&DataCard> = state.session.cards().iter().collect();
                let corpus = others.iter().chain(own.iter().copied());
                links = link_candidates(&card, corpus, cfg.link_threshold, Some(cfg.link_k));
                provocation = self.choose_provocation(&session, &card, &links, &others, &surfaced)?;
            }

            let mut provocation_view = None;
            let mut surfaced_pair = None;
            if let Some((p, pair)) = provocation {
                let pc = session
                    .append_provocation(&p, after(card.ts)?, card.geo)?
                    .clone();
                if let Some(pair) = &pair {
                    for l in links.iter_mut() {
                        if (&l.from_card, &l.to_card) == (&pair.0, &pair.1) {
                            l.surfaced = true;
                        }
                    }
                }
                surfaced_pair = pair;
                provocation_view = Some(ProvocationView {
                    text: p.text().to_string(),
                    trigger_card: p.trigger_card().to_string(),
                    linked_card: p.linked_card().map(str::to_string),
                    gate: p.gate().clone(),
                    card: CardView {
                        seq: session.len() - 1,
                        card: pc,
                    },
                });
            }
            let new_cards = 1 + usize::from(provocation_view.is_some());
            Ok(Ok(Commit {
                session,
                new_cards,
                index: Some(IndexEntry {
                    idempotency_key: req.idempotency_key.clone(),
                    card_id: card.id.clone(),
                    provocation_id: provocation_view.as_ref().map(|p| p.card.card.id.clone()),
                    surfaced: surfaced_pair,
                }),
                value: IngestOutcome {
                    card: card_view,
                    provocation: provocation_view,
                    links,
                    replayed: false,
                },
            }))
        })?;

        if !outcome.replayed {
            self.publish_ingest(&before, &outcome);
        }
        Ok(outcome)
    }

    fn choose_provocation(
        &self,
        session: &Session,
        card: &DataCard,
        links: &[SemanticLink],
        others: &[DataCard],
        surfaced: &HashSet<(String, String)>,
    ) -> Result<Option<Chosen>> {
        let policy = self.config.provocation;
        if policy.mode == PolicyMode::Off {
            return Ok(None);
        }
        if policy.mode == PolicyMode::OnLink {
            let fresh = links
                .iter()
                .find(|l| !surfaced.contains(&(l.from_card.clone(), l.to_card.clone())));
            if let Some(link) = fresh {
                let prior = session
                    .card(&link.to_card)
                    .or_else(|| others.iter().find(|c| c.id == link.to_card))
                    .ok_or_else(|| AtlasError::CardNotFound(link.to_card.clone()))?;
                if let Ok(p) = generate_linked(card, prior) {
                    return Ok(Some((p, Some((link.from_card.clone(), link.to_card.clone())))));
                }
            }
        }
        if policy.every_nth > 0 {
            let run = session
                .cards()
                .iter()
                .rev()
                .take_while(|c| c.kind != CardKind::Provocation)
                .filter(|c| c.kind == CardKind::Capture)
                .count();
            if run > 0 && run % policy.every_nth == 0 {
                // Cards without content words simply go unprovoked.
                return Ok(generate_single(card).ok().map(|p| (p, None)));
            }
        }
        Ok(None)
    }

    fn publish_ingest(&self, before: &SessionState, outcome: &IngestOutcome) {
        let sid = before.session.id().to_string();
        self.publish(
            &sid,
            Event::CardAppended {
                session_id: sid.clone(),
                card: outcome.card.clone(),
            },
        );
        if let Some(p) = &outcome.provocation {
            self.publish(
                &sid,
                Event::ProvocationIssued {
                    session_id: sid.clone(),
                    provocation: p.clone(),
                },
            );
        }
        let old = build_trajectory(&before.session, &self.config.etm).ok();
        if let Ok(after) = self.trajectory(&sid) {
            let known: HashSet<String> = old
                .iter()
                .flat_map(|t| t.pivots.iter().map(|p| t.points[p.index].card_id.clone()))
                .collect();
            let record = TrajectoryRecord::from(&after);
            for (marker, rec) in after.pivots.iter().zip(record.pivots) {
                if !known.contains(&after.points[marker.index].card_id) {
                    self.publish(
                        &sid,
                        Event::PivotDetected {
                            session_id: sid.clone(),
                            pivot: rec,
                        },
                    );
                }
            }
        }
    }

    pub fn cards_after(&self, session_id: &str, after: Option<usize>) -> Result<Vec<CardView>> {
        let snap = self.store.snapshot(session_id)?;
        let start = after.map(|a| a + 1).unwrap_or(0);
        Ok(snap
            .session
            .cards()
            .iter()
            .enumerate()
            .skip(start)
            .map(|(seq, c)| CardView { seq, card: c.clone() })
            .collect())
    }

    pub fn trajectory(&self, session_id: &str) -> Result<EpistemicTrajectory> {
        let snap = self.store.snapshot(session_id)?;
        Ok(build_trajectory(&snap.session, &self.config.etm)?)
    }

    pub fn authenticity(&self, session_id: &str) -> Result<AuthenticityReport> {
        let snap = self.store.snapshot(session_id)?;
        Ok(verify_session(&snap.session, &self.config.auth))
    }

    /// The learner's semantic network with surfaced flags.
    pub fn learner_links(&self, learner: &str) -> Result<Vec<SemanticLink>> {
        let snaps = self.store.learner_snapshots(learner);
        if snaps.is_empty() {
            return Err(AtlasError::LearnerNotFound(learner.to_string()));
        }
        let surfaced = self.learner_surfaced(learner);
        let mut links = build_network(snaps.iter().flat_map(|s| s.session.cards()), self.config.link_threshold);
        for l in links.iter_mut() {
            l.surfaced = surfaced.contains(&(l.from_card.clone(), l.to_card.clone()));
        }
        Ok(links)
    }

    pub fn gate_text(&self, session_id: &str, text: &str) -> Result<GateVerdict> {
        let snap = self.store.snapshot(session_id)?;
        Ok(gate(text, &Vocabulary::from_cards(snap.session.cards())))
    }

    /// Template provocation for an existing capture: linked if the card has
    /// an earlier semantic neighbour, otherwise single.
    pub fn provoke_card(&self, card_id: &str) -> Result<Provocation> {
        let (state, card) = self.store.find_card(card_id)?;
        let corpus: Vec<DataCard> = self
            .store
            .learner_snapshots(state.session.learner_id())
            .iter()
            .flat_map(|s| s.session.cards().to_vec())
            .collect();
        let links = link_candidates(&card, &corpus, self.config.link_threshold, Some(1));
        if let Some(link) = links.first() {
            let prior = corpus
                .iter()
                .find(|c| c.id == link.to_card)
                .ok_or_else(|| AtlasError::CardNotFound(link.to_card.clone()))?;
            return Ok(generate_linked(&card, prior)?);
        }
        Ok(generate_single(&card)?)
    }

    /// Appends an already-gated provocation for `card_id` to its session.
    pub fn append_provocation(&self, p: &Provocation) -> Result<CardView> {
        let (state, trigger) = self.store.find_card(p.trigger_card())?;
        let sid = state.session.id().to_string();
        let surfaced = p.linked_card().map(|l| (trigger.id.clone(), l.to_string()));
        let view = self.store.commit(&sid, |state| {
            let mut session = state.session.clone();
            let ts = after(session.end_time().unwrap_or(trigger.ts).max(trigger.ts))?;
            let card = session.append_provocation(p, ts, trigger.geo)?.clone();
            let view = CardView {
                seq: session.len() - 1,
                card: card.clone(),
            };
            Ok(Ok(Commit {
                session,
                new_cards: 1,
                index: Some(IndexEntry {
                    idempotency_key: None,
                    card_id: trigger.id.clone(),
                    provocation_id: Some(card.id),
                    surfaced,
                }),
                value: view,
            }))
        })?;
        Ok(view)
    }
}

/// Provocation cards are stamped one second after what they follow.
fn after(ts: Timestamp) -> Result<Timestamp> {
    ts.checked_plus_seconds(1)
        .ok_or_else(|| field_atlas_core::Error::InvalidTimestamp(ts.to_rfc3339()).into())
}

fn replay(store: &Store, state: &SessionState, entry: &IndexEntry) -> Result<IngestOutcome> {
    let view = |id: &str| -> Result<CardView> {
        let seq = state
            .seq_of(id)
            .ok_or_else(|| AtlasError::CardNotFound(id.to_string()))?;
        Ok(CardView {
            seq,
            card: state.session.cards()[seq].clone(),
        })
    };
    let card = view(&entry.card_id)?;
    let provocation = match &entry.provocation_id {
        Some(pid) => {
            let pc = view(pid)?;
            let mut vocab = Vocabulary::from_cards(&state.session.cards()[..pc.seq]);
            if let Some((_, linked)) = &entry.surfaced {
                if let Ok((_, prior)) = store.find_card(linked) {
                    vocab.add_text(&prior.voice_text);
                }
            }
            Some(ProvocationView {
                text: pc.card.voice_text.clone(),
                trigger_card: entry.card_id.clone(),
                linked_card: entry.surfaced.as_ref().map(|p| p.1.clone()),
                gate: gate(&pc.card.voice_text, &vocab),
                card: pc,
            })
        }
        None => None,
    };
    Ok(IngestOutcome {
        card,
        provocation,
        links: Vec::new(),
        replayed: true,
    })
}
