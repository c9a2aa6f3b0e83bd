use alloc::string::String;

use crate::provoke::GateVerdict;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid RFC 3339 timestamp {0:?}")]
    InvalidTimestamp(String),
    #[error("invalid geo point ({lat}, {lon})")]
    InvalidGeoPoint { lat: f64, lon: f64 },
    #[error("geofence radius must be positive, got {0} m")]
    InvalidGeofence(f64),
    #[error("embedding dimension must be at least 8, got {0}")]
    EmbedDimTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("provocation cards can only be appended through the provocation gate")]
    ProvocationNotGated,
    #[error("chain broken at card {index} ({card_id}): {fault}")]
    Chain {
        index: usize,
        card_id: String,
        fault: ChainFault,
    },
    #[error("card {card_id} does not belong to session {session_id}")]
    ForeignCard { card_id: String, session_id: String },
    #[error("card {0} has no content tokens to echo")]
    NoContentTokens(String),
    #[error("invalid link: {0}")]
    InvalidLink(String),
    #[error("candidate provocation rejected by the gate")]
    GateRejected(GateVerdict),
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("session {0} has no capture or response cards")]
    NoCaptures(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainFault {
    PrevHashMismatch,
    SelfHashMismatch,
    SessionMismatch,
    EmbeddingDim,
}

impl core::fmt::Display for ChainFault {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            ChainFault::PrevHashMismatch => "prev_hash does not match the preceding card",
            ChainFault::SelfHashMismatch => "self_hash does not match the recomputed digest",
            ChainFault::SessionMismatch => "card belongs to a different session or learner",
            ChainFault::EmbeddingDim => "embedding dimension differs from the session's",
        })
    }
}
