//! Data Cards, sessions and the append-only hash chain.
//!
//! A card's `self_hash` is the lowercase hex SHA-256 of its canonical payload:
//! `id, learner_id, session_id, ts, lat, lon, photo_ref, voice_text, kind,
//! prev_hash` joined with the unit separator `0x1f`. Timestamps use the
//! canonical UTC rendering of [`Timestamp`]; coordinates use the shortest
//! round-trip decimal form.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use sha2::{Digest, Sha256};

use crate::embed::{Embedder, Embedding, HashedBagOfWords, DEFAULT_DIM, MIN_DIM};
use crate::error::{ChainFault, Error, Result};
use crate::geo::{GeoPoint, Geofence};
use crate::provoke::Provocation;
use crate::time::Timestamp;

/// `prev_hash` of the first card in every session.
pub const GENESIS_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

const FIELD_SEPARATOR: char = '\u{1f}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CardKind {
    Capture,
    Provocation,
    Response,
}

impl CardKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CardKind::Capture => "capture",
            CardKind::Provocation => "provocation",
            CardKind::Response => "response",
        }
    }

    /// Captures and responses carry the learner's own words.
    pub fn is_learner(&self) -> bool {
        !matches!(self, CardKind::Provocation)
    }
}

impl fmt::Display for CardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for CardKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "capture" => Ok(CardKind::Capture),
            "provocation" => Ok(CardKind::Provocation),
            "response" => Ok(CardKind::Response),
            _ => Err(Error::InvalidParam("card kind must be capture, provocation or response")),
        }
    }
}

/// What a learner submits; the session fills in identity, embedding and hashes.
#[derive(Debug, Clone, PartialEq)]
pub struct CardInput {
    pub ts: Timestamp,
    pub geo: GeoPoint,
    pub photo_ref: String,
    pub voice_text: String,
    pub kind: CardKind,
}

/// One dual-coded capture: photo reference, voice transcript, GPS and time.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DataCard {
    pub id: String,
    pub learner_id: String,
    pub session_id: String,
    pub ts: Timestamp,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub geo: GeoPoint,
    pub photo_ref: String,
    pub voice_text: String,
    pub kind: CardKind,
    pub embedding: Embedding,
    pub prev_hash: String,
    pub self_hash: String,
}

impl DataCard {
    /// The exact byte string fed to SHA-256.
    pub fn canonical_payload(&self) -> String {
        canonical_payload(
            &self.id,
            &self.learner_id,
            &self.session_id,
            &self.ts,
            &self.geo,
            &self.photo_ref,
            &self.voice_text,
            self.kind,
            &self.prev_hash,
        )
    }

    pub fn compute_hash(&self) -> String {
        sha256_hex(self.canonical_payload().as_bytes())
    }
}

#[allow(clippy::too_many_arguments)]
fn canonical_payload(
    id: &str,
    learner_id: &str,
    session_id: &str,
    ts: &Timestamp,
    geo: &GeoPoint,
    photo_ref: &str,
    voice_text: &str,
    kind: CardKind,
    prev_hash: &str,
) -> String {
    let fields = [
        id.to_string(),
        learner_id.to_string(),
        session_id.to_string(),
        ts.to_rfc3339(),
        format!("{}", geo.lat),
        format!("{}", geo.lon),
        photo_ref.to_string(),
        voice_text.to_string(),
        kind.as_str().to_string(),
        prev_hash.to_string(),
    ];
    let mut out = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(FIELD_SEPARATOR);
        }
        out.push_str(f);
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Session metadata; the first line of a session file.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionHeader {
    pub id: String,
    pub learner_id: String,
    pub title: String,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub geofence: Option<Geofence>,
    pub embed_dim: usize,
}

impl SessionHeader {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim < MIN_DIM {
            return Err(Error::EmbedDimTooSmall(self.embed_dim));
        }
        if let Some(g) = &self.geofence {
            Geofence::new(g.center, g.radius_m)?;
        }
        Ok(())
    }
}

/// An ordered, append-only sequence of hash-chained cards.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    header: SessionHeader,
    cards: Vec<DataCard>,
}

impl Session {
    pub fn create(
        id: impl Into<String>,
        learner_id: impl Into<String>,
        title: impl Into<String>,
        geofence: Option<Geofence>,
        embed_dim: usize,
    ) -> Result<Self> {
        let header = SessionHeader {
            id: id.into(),
            learner_id: learner_id.into(),
            title: title.into(),
            geofence,
            embed_dim,
        };
        header.validate()?;
        Ok(Session {
            header,
            cards: Vec::new(),
        })
    }

    pub fn with_default_dim(
        id: impl Into<String>,
        learner_id: impl Into<String>,
        title: impl Into<String>,
        geofence: Option<Geofence>,
    ) -> Result<Self> {
        Self::create(id, learner_id, title, geofence, DEFAULT_DIM)
    }

    /// Rebuilds a session from stored parts, verifying the whole chain.
    pub fn from_parts(header: SessionHeader, cards: Vec<DataCard>) -> Result<Self> {
        header.validate()?;
        let session = Session { header, cards };
        if let Some((index, fault)) = session.first_chain_fault() {
            return Err(Error::Chain {
                index,
                card_id: session.cards[index].id.clone(),
                fault,
            });
        }
        Ok(session)
    }

    /// Rebuilds a session without checking the chain, so that a verifier can
    /// report on damaged files instead of refusing them.
    pub fn from_parts_unchecked(header: SessionHeader, cards: Vec<DataCard>) -> Self {
        Session { header, cards }
    }

    pub fn header(&self) -> &SessionHeader {
        &self.header
    }

    pub fn id(&self) -> &str {
        &self.header.id
    }

    pub fn learner_id(&self) -> &str {
        &self.header.learner_id
    }

    pub fn embed_dim(&self) -> usize {
        self.header.embed_dim
    }

    pub fn cards(&self) -> &[DataCard] {
        &self.cards
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn card(&self, id: &str) -> Option<&DataCard> {
        self.cards.iter().find(|c| c.id == id)
    }

    /// Last card's timestamp: the end of the session's time interval.
    pub fn end_time(&self) -> Option<Timestamp> {
        self.cards.last().map(|c| c.ts)
    }

    pub fn head_hash(&self) -> &str {
        self.cards
            .last()
            .map(|c| c.self_hash.as_str())
            .unwrap_or(GENESIS_HASH)
    }

    /// Appends a learner card (capture or response) using the reference embedder.
    ///
    /// Out-of-order timestamps are accepted here; the authenticity checks flag them.
    pub fn append_card(&mut self, input: CardInput) -> Result<&DataCard> {
        let embedder = HashedBagOfWords::new(self.header.embed_dim)?;
        self.append_card_with(input, &embedder)
    }

    pub fn append_card_with(&mut self, input: CardInput, embedder: &dyn Embedder) -> Result<&DataCard> {
        if input.kind == CardKind::Provocation {
            return Err(Error::ProvocationNotGated);
        }
        self.push(input, embedder)
    }

    /// Appends a gate-approved provocation as a timeline card.
    pub fn append_provocation(
        &mut self,
        provocation: &Provocation,
        ts: Timestamp,
        geo: GeoPoint,
    ) -> Result<&DataCard> {
        if !provocation.gate().passed {
            return Err(Error::GateRejected(provocation.gate().clone()));
        }
        let embedder = HashedBagOfWords::new(self.header.embed_dim)?;
        self.push(
            CardInput {
                ts,
                geo,
                photo_ref: String::new(),
                voice_text: provocation.text().to_string(),
                kind: CardKind::Provocation,
            },
            &embedder,
        )
    }

    fn push(&mut self, input: CardInput, embedder: &dyn Embedder) -> Result<&DataCard> {
        if !input.geo.is_valid() {
            return Err(Error::InvalidGeoPoint {
                lat: input.geo.lat,
                lon: input.geo.lon,
            });
        }
        if embedder.dim() != self.header.embed_dim {
            return Err(Error::DimMismatch {
                expected: self.header.embed_dim,
                found: embedder.dim(),
            });
        }
        let id = format!("{}-{:04}", self.header.id, self.cards.len());
        let prev_hash = self.head_hash().to_string();
        let embedding = embedder.embed(&input.voice_text);
        let mut card = DataCard {
            id,
            learner_id: self.header.learner_id.clone(),
            session_id: self.header.id.clone(),
            ts: input.ts,
            geo: input.geo,
            photo_ref: input.photo_ref,
            voice_text: input.voice_text,
            kind: input.kind,
            embedding,
            prev_hash,
            self_hash: String::new(),
        };
        card.self_hash = card.compute_hash();
        self.cards.push(card);
        Ok(self.cards.last().expect("just pushed"))
    }

    /// Every chain fault in order: `(card index, fault)`.
    pub fn chain_faults(&self) -> Vec<(usize, ChainFault)> {
        let mut faults = Vec::new();
        let mut expected_prev = GENESIS_HASH;
        for (i, card) in self.cards.iter().enumerate() {
            if card.session_id != self.header.id || card.learner_id != self.header.learner_id {
                faults.push((i, ChainFault::SessionMismatch));
            }
            if card.embedding.dim() != self.header.embed_dim {
                faults.push((i, ChainFault::EmbeddingDim));
            }
            if card.prev_hash != expected_prev {
                faults.push((i, ChainFault::PrevHashMismatch));
            }
            if card.compute_hash() != card.self_hash {
                faults.push((i, ChainFault::SelfHashMismatch));
            }
            expected_prev = &card.self_hash;
        }
        faults
    }

    pub fn first_chain_fault(&self) -> Option<(usize, ChainFault)> {
        self.chain_faults().into_iter().next()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    fn input(ts: &str, text: &str) -> CardInput {
        CardInput {
            ts: Timestamp::parse(ts).unwrap(),
            geo: fixture::met_gallery_760(),
            photo_ref: "img/0001.jpg".into(),
            voice_text: text.into(),
            kind: CardKind::Capture,
        }
    }

    #[test]
    fn create_session_cases() {
        let s = Session::create("s1", "maya", "American Wing", None, 128).unwrap();
        assert!(s.is_empty());
        let fence = Geofence::new(GeoPoint::new(40.7794, -73.9632).unwrap(), 200.0).unwrap();
        let s = Session::create("s2", "maya", "Gallery 760", Some(fence), 128).unwrap();
        assert_eq!(s.header().geofence.unwrap().radius_m, 200.0);
        assert_eq!(
            Session::create("s3", "x", "t", None, 4),
            Err(Error::EmbedDimTooSmall(4))
        );
    }

    #[test]
    fn first_card_links_to_genesis() {
        let mut s = Session::create("s", "maya", "t", None, 128).unwrap();
        let card = s.append_card(input("2025-10-04T14:00:00Z", "light")).unwrap();
        assert_eq!(card.prev_hash, GENESIS_HASH);
        assert_eq!(card.self_hash.len(), 64);
        let first = card.self_hash.clone();
        let second = s.append_card(input("2025-10-04T14:01:00Z", "ice")).unwrap();
        assert_eq!(second.prev_hash, first);
        assert!(s.first_chain_fault().is_none());
    }

    #[test]
    fn canonical_payload_layout() {
        let mut s = Session::create("s", "maya", "t", None, 8).unwrap();
        let card = s.append_card(input("2025-10-04T14:00:00Z", "light")).unwrap();
        let expected = format!(
            "s-0000\u{1f}maya\u{1f}s\u{1f}2025-10-04T14:00:00Z\u{1f}40.77945\u{1f}-73.96325\u{1f}img/0001.jpg\u{1f}light\u{1f}capture\u{1f}{GENESIS_HASH}"
        );
        assert_eq!(card.canonical_payload(), expected);
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn provocation_kind_requires_gate() {
        let mut s = Session::create("s", "maya", "t", None, 128).unwrap();
        let mut i = input("2025-10-04T14:00:00Z", "What do you see?");
        i.kind = CardKind::Provocation;
        assert_eq!(s.append_card(i).unwrap_err(), Error::ProvocationNotGated);
    }

    #[test]
    fn non_monotone_time_is_stored() {
        let mut s = Session::create("s", "maya", "t", None, 128).unwrap();
        s.append_card(input("2025-10-04T14:05:00Z", "light")).unwrap();
        s.append_card(input("2025-10-04T14:00:00Z", "ice")).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn same_text_same_embedding() {
        let mut s = Session::create("s", "maya", "t", None, 128).unwrap();
        s.append_card(input("2025-10-04T14:00:00Z", "the light pulls him")).unwrap();
        s.append_card(input("2025-10-04T14:01:00Z", "the light pulls him")).unwrap();
        assert_eq!(s.cards()[0].embedding, s.cards()[1].embedding);
    }

    #[test]
    fn tamper_is_detected() {
        let s = fixture::maya_met_session();
        let (header, mut cards) = (s.header().clone(), s.cards().to_vec());
        cards[2].voice_text.push('!');
        let err = Session::from_parts(header, cards).unwrap_err();
        assert!(matches!(
            err,
            Error::Chain {
                index: 2,
                fault: ChainFault::SelfHashMismatch,
                ..
            }
        ));
    }
}
