use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::model::{CardKind, Session};
use crate::time::Timestamp;

use super::pivot::{detect_pivots, PivotParams};
use super::velocity::{velocity_series, VelocityParams};
use super::{reduce, smooth};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EtmParams {
    /// Odd smoothing window; 1 disables smoothing.
    pub window: usize,
    pub velocity: VelocityParams,
    pub pivot: PivotParams,
}

impl Default for EtmParams {
    fn default() -> Self {
        EtmParams {
            window: 3,
            velocity: VelocityParams::default(),
            pivot: PivotParams::default(),
        }
    }
}

/// One card on the session timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineEntry {
    pub card_id: String,
    pub ts: Timestamp,
    pub kind: CardKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub card_id: String,
    pub t: Timestamp,
    /// Smoothed embedding.
    pub e: Vec<f64>,
    /// Epistemic velocity, embedding distance per velocity time unit.
    pub v: f64,
    pub xy: [f64; 2],
    pub geo: GeoPoint,
    /// Position of the source card on the timeline.
    pub timeline_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotMarker {
    pub index: usize,
    pub turn_cosine: f64,
    pub magnitude: f64,
    pub attributed_provocation: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpistemicTrajectory {
    pub session_id: String,
    pub points: Vec<TrajectoryPoint>,
    pub pivots: Vec<PivotMarker>,
    /// Timeline positions of provocation cards.
    pub provocation_indices: Vec<usize>,
    /// Every card of the session in append order.
    pub timeline: Vec<TimelineEntry>,
}

impl EpistemicTrajectory {
    pub fn xy(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| p.xy).collect()
    }

    pub fn velocities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.v).collect()
    }

    /// Mean velocity of the points whose time falls in `[from, to]` minutes
    /// after the first point.
    pub fn mean_velocity_between(&self, from_min: f64, to_min: f64) -> Option<f64> {
        let start = self.points.first()?.t;
        let vs: Vec<f64> = self
            .points
            .iter()
            .filter(|p| {
                let m = p.t.minutes_since(&start);
                m >= from_min && m <= to_min
            })
            .map(|p| p.v)
            .collect();
        (!vs.is_empty()).then(|| vs.iter().sum::<f64>() / vs.len() as f64)
    }

    pub fn duration_minutes(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.t.minutes_since(&a.t),
            _ => 0.0,
        }
    }
}

/// Runs the pipeline: learner cards, smoothing, velocity, reduction, pivots.
///
/// Provocation cards stay on the timeline but are not trajectory points.
pub fn build_trajectory(session: &Session, params: &EtmParams) -> Result<EpistemicTrajectory> {
    params.pivot.validate()?;
    let timeline: Vec<TimelineEntry> = session
        .cards()
        .iter()
        .map(|c| TimelineEntry {
            card_id: c.id.clone(),
            ts: c.ts,
            kind: c.kind,
        })
        .collect();
    let provocation_indices = timeline
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind == CardKind::Provocation)
        .map(|(i, _)| i)
        .collect();
    let learner: Vec<(usize, &crate::model::DataCard)> = session
        .cards()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind.is_learner())
        .collect();
    if learner.is_empty() {
        return Err(Error::NoCaptures(session.id().into()));
    }

    let raw: Vec<&[f64]> = learner.iter().map(|(_, c)| c.embedding.values()).collect();
    let smoothed = smooth(&raw, params.window)?;
    let times: Vec<Timestamp> = learner.iter().map(|(_, c)| c.ts).collect();
    let velocity = velocity_series(&smoothed, &times, &params.velocity)?;
    let xy = reduce(&smoothed);

    let points = learner
        .iter()
        .zip(smoothed)
        .zip(velocity)
        .zip(xy)
        .map(|((((ti, card), e), v), xy)| TrajectoryPoint {
            card_id: card.id.clone(),
            t: card.ts,
            e,
            v,
            xy,
            geo: card.geo,
            timeline_index: *ti,
        })
        .collect();

    let mut traj = EpistemicTrajectory {
        session_id: session.id().into(),
        points,
        pivots: Vec::new(),
        provocation_indices,
        timeline,
    };
    traj.pivots = detect_pivots(&traj, &params.pivot);
    Ok(traj)
}
