//! Line-oriented file formats.
//!
//! A session file is UTF-8 JSONL with LF endings: line 1 is the session
//! header `{id, learner_id, title, geofence?, embed_dim}`, every following
//! line is one card `{id, learner_id, session_id, ts, lat, lon, photo_ref,
//! voice_text, kind, embedding, prev_hash, self_hash}` in append order.

use std::io::{BufRead, Write};

use field_atlas_core::authline::AuthenticityReport;
use field_atlas_core::etm::EpistemicTrajectory;
use field_atlas_core::model::{DataCard, Session, SessionHeader};
use field_atlas_core::semnet::SemanticLink;
use serde::{Deserialize, Serialize};

use crate::error::{AtlasError, Result};

fn to_line<T: Serialize>(value: &T) -> String {
    // Serializing these plain data types cannot fail.
    serde_json::to_string(value).expect("serializable record")
}

pub fn header_line(header: &SessionHeader) -> String {
    to_line(header)
}

pub fn card_line(card: &DataCard) -> String {
    to_line(card)
}

/// Writes the whole session as JSONL.
pub fn export_session(session: &Session, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", header_line(session.header()))?;
    for card in session.cards() {
        writeln!(out, "{}", card_line(card))?;
    }
    Ok(())
}

pub fn export_session_bytes(session: &Session) -> Vec<u8> {
    let mut buf = Vec::new();
    export_session(session, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

fn read_records(input: impl BufRead) -> Result<(SessionHeader, Vec<DataCard>)> {
    let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let (line_no, first) = lines.next().ok_or(AtlasError::MissingHeader)?;
    let first = first.map_err(|e| AtlasError::Format {
        line: line_no,
        message: e.to_string(),
    })?;
    let header: SessionHeader = serde_json::from_str(&first).map_err(|e| AtlasError::Format {
        line: line_no,
        message: format!("bad session header: {e}"),
    })?;
    let mut cards = Vec::new();
    for (line, text) in lines {
        let text = text.map_err(|e| AtlasError::Format {
            line,
            message: e.to_string(),
        })?;
        let card: DataCard = serde_json::from_str(&text).map_err(|e| AtlasError::Format {
            line,
            message: format!("bad card record: {e}"),
        })?;
        cards.push(card);
    }
    Ok((header, cards))
}

/// Parses a session file and verifies its chain. A broken chain is reported
/// against the first offending card and its line number.
pub fn load_session(input: impl BufRead) -> Result<Session> {
    let (header, cards) = read_records(input)?;
    header.validate()?;
    let probe = Session::from_parts_unchecked(header.clone(), cards.clone());
    if let Some((index, fault)) = probe.first_chain_fault() {
        return Err(AtlasError::BadCard {
            line: index + 2,
            card_id: cards[index].id.clone(),
            source: field_atlas_core::Error::Chain {
                index,
                card_id: cards[index].id.clone(),
                fault,
            },
        });
    }
    Ok(Session::from_parts(header, cards)?)
}

/// Parses a session file without chain verification, for authenticity reports.
pub fn load_session_unverified(input: impl BufRead) -> Result<Session> {
    let (header, cards) = read_records(input)?;
    header.validate()?;
    Ok(Session::from_parts_unchecked(header, cards))
}

pub fn links_jsonl(links: &[SemanticLink]) -> String {
    links.iter().map(|l| to_line(l) + "\n").collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPointRecord {
    pub card_id: String,
    pub ts: String,
    pub xy: [f64; 2],
    pub v: f64,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotRecord {
    pub index: usize,
    pub turn_cosine: f64,
    pub magnitude: f64,
    pub attributed_provocation: Option<String>,
}

/// Export record for a built trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub session_id: String,
    pub points: Vec<TrajectoryPointRecord>,
    pub pivots: Vec<PivotRecord>,
    pub provocation_indices: Vec<usize>,
}

impl From<&EpistemicTrajectory> for TrajectoryRecord {
    fn from(t: &EpistemicTrajectory) -> Self {
        TrajectoryRecord {
            session_id: t.session_id.clone(),
            points: t
                .points
                .iter()
                .map(|p| TrajectoryPointRecord {
                    card_id: p.card_id.clone(),
                    ts: p.t.to_rfc3339(),
                    xy: p.xy,
                    v: p.v,
                    lat: p.geo.lat,
                    lon: p.geo.lon,
                })
                .collect(),
            pivots: t
                .pivots
                .iter()
                .map(|p| PivotRecord {
                    index: p.index,
                    turn_cosine: p.turn_cosine,
                    magnitude: p.magnitude,
                    attributed_provocation: p.attributed_provocation.clone(),
                })
                .collect(),
            provocation_indices: t.provocation_indices.clone(),
        }
    }
}

pub fn trajectory_json(t: &EpistemicTrajectory) -> String {
    to_line(&TrajectoryRecord::from(t))
}

pub fn report_json(report: &AuthenticityReport) -> String {
    to_line(report)
}
