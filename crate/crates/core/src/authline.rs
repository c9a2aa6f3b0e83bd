//! Authenticity checks over a session's physical metadata and hash chain.
//!
//! A clean report is evidence that the session is physically plausible and
//! unaltered since capture. It raises the cost of fabrication; it does not
//! prove authorship.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::geo::haversine;
use crate::model::Session;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct AuthParams {
    /// Maximum plausible ground speed between consecutive cards, m/s.
    pub v_max: f64,
    /// Minimum spacing between consecutive learner cards, seconds.
    pub t_min: f64,
    /// Moves shorter than this (GPS jitter) never count as speeding, meters.
    pub deadband_m: f64,
}

impl Default for AuthParams {
    fn default() -> Self {
        AuthParams {
            v_max: 3.0,
            t_min: 10.0,
            deadband_m: 15.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ViolationCode {
    /// Timestamps not strictly increasing.
    A1,
    /// Implausible speed between consecutive cards.
    A2,
    /// Card outside the declared geofence.
    A3,
    /// Hash chain broken.
    A4,
    /// Learner cards closer together than a capture can take.
    A5,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    pub code: ViolationCode,
    pub card_ids: Vec<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AuthenticityReport {
    pub session_id: String,
    pub authentic: bool,
    pub violations: Vec<Violation>,
    pub params_used: AuthParams,
}

impl AuthenticityReport {
    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        let mut c: Vec<ViolationCode> = self.violations.iter().map(|v| v.code).collect();
        c.dedup();
        c
    }
}

/// Runs checks A1-A5 over one session. Gaps between sessions are never
/// checked, so a learner's sessions can be months apart.
pub fn verify_session(session: &Session, params: &AuthParams) -> AuthenticityReport {
    let cards = session.cards();
    let mut violations = Vec::new();

    for w in cards.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.ts.seconds_since(&a.ts);
        if dt <= 0.0 {
            violations.push(Violation {
                code: ViolationCode::A1,
                card_ids: vec![a.id.clone(), b.id.clone()],
                detail: format!("{} is not after {}", b.ts, a.ts),
            });
        }
        let meters = haversine(&a.geo, &b.geo);
        if meters >= params.deadband_m {
            let speed = if dt > 0.0 { meters / dt } else { f64::INFINITY };
            if speed > params.v_max {
                violations.push(Violation {
                    code: ViolationCode::A2,
                    card_ids: vec![a.id.clone(), b.id.clone()],
                    detail: format!("{meters:.0} m in {dt:.0} s ({speed:.1} m/s > {} m/s)", params.v_max),
                });
            }
        }
    }

    if let Some(fence) = &session.header().geofence {
        for c in cards {
            if !fence.contains(&c.geo) {
                violations.push(Violation {
                    code: ViolationCode::A3,
                    card_ids: vec![c.id.clone()],
                    detail: format!(
                        "{:.0} m from the geofence center (radius {} m)",
                        haversine(&fence.center, &c.geo),
                        fence.radius_m
                    ),
                });
            }
        }
    }

    for (i, fault) in session.chain_faults() {
        violations.push(Violation {
            code: ViolationCode::A4,
            card_ids: vec![cards[i].id.clone()],
            detail: format!("{fault}"),
        });
    }

    let learner: Vec<_> = cards.iter().filter(|c| c.kind.is_learner()).collect();
    for w in learner.windows(2) {
        let dt = w[1].ts.seconds_since(&w[0].ts);
        if dt < params.t_min {
            violations.push(Violation {
                code: ViolationCode::A5,
                card_ids: vec![w[0].id.clone(), w[1].id.clone()],
                detail: format!("{dt:.0} s between learner cards (< {} s)", params.t_min),
            });
        }
    }

    violations.sort_by_key(|v| v.code);
    AuthenticityReport {
        session_id: session.id().into(),
        authentic: violations.is_empty(),
        violations,
        params_used: *params,
    }
}

/// Verifies each session on its own.
pub fn verify_sessions<'a>(
    sessions: impl IntoIterator<Item = &'a Session>,
    params: &AuthParams,
) -> Vec<AuthenticityReport> {
    sessions.into_iter().map(|s| verify_session(s, params)).collect()
}
