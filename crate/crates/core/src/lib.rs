//! Core engine for geo- and time-anchored learning captures.
//!
//! * [`model`]: Data Cards, sessions and the SHA-256 hash chain.
//! * [`embed`]: the reference hashed bag-of-words embedder and cosine similarity.
//! * [`semnet`]: semantic links between captures across sessions.
//! * [`provoke`]: the question-only gate and template provocations.
//! * [`etm`]: trajectory smoothing, reduction, velocity, pivots and comparison.
//! * [`authline`]: physical-metadata and chain authenticity checks.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
extern crate alloc;

pub mod authline;
pub mod embed;
pub mod error;
pub mod etm;
pub mod fixture;
pub mod geo;
pub mod model;
pub mod provoke;
pub mod semnet;
pub mod time;

pub use authline::{verify_session, AuthParams, AuthenticityReport, Violation, ViolationCode};
pub use embed::{cosine, embed_text, tokenize, Embedder, Embedding, HashedBagOfWords};
pub use error::{ChainFault, Error, Result};
pub use etm::{build_trajectory, EpistemicTrajectory, EtmParams, PivotParams};
pub use geo::{haversine, GeoPoint, Geofence};
pub use model::{CardInput, CardKind, DataCard, Session, SessionHeader, GENESIS_HASH};
pub use provoke::{gate, generate_linked, generate_single, GateVerdict, Provocation, Vocabulary};
pub use semnet::{build_network, link_candidates, SemanticLink, SemanticNetwork};
pub use time::Timestamp;
