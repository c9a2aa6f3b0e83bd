//! Files, plots, service and CLI plumbing around [`field_atlas_core`].
//!
//! * [`format`]: JSONL session files and export records.
//! * [`store`]: a data directory of session files with durable appends.
//! * [`engine`]: ingest, linking, provocation policy and queries.
//! * [`plot`]: two-panel SVG trajectory plots.
//! * [`service`]: the `atlasd` HTTP API.

pub mod config;
pub mod engine;
pub mod error;
pub mod format;
pub mod plot;
pub mod service;
pub mod store;

pub use config::ServiceConfig;
pub use engine::Engine;
pub use error::{AtlasError, Result};
