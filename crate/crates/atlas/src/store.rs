//! Session files in a data directory.
//!
//! Each session lives in `<id>.jsonl`. A sidecar `<id>.index.jsonl` records
//! idempotency keys and surfaced links, one JSON object per ingest. Writes to
//! one session are serialized; readers take cheap snapshots.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use field_atlas_core::model::{DataCard, Session};
use serde::{Deserialize, Serialize};

use crate::error::{AtlasError, Result};
use crate::format;

const SESSION_EXT: &str = "jsonl";
const INDEX_SUFFIX: &str = ".index.jsonl";

/// One committed ingest as recorded in the sidecar index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
    pub card_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provocation_id: Option<String>,
    /// `(newer, older)` link surfaced by the provocation, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surfaced: Option<(String, String)>,
}

/// Immutable view of a session and its index.
#[derive(Debug, Clone)]
pub struct SessionState {
    pub session: Session,
    pub index: Vec<IndexEntry>,
}

impl SessionState {
    pub fn by_idempotency_key(&self, key: &str) -> Option<&IndexEntry> {
        self.index
            .iter()
            .find(|e| e.idempotency_key.as_deref() == Some(key))
    }

    pub fn surfaced_pairs(&self) -> impl Iterator<Item = &(String, String)> {
        self.index.iter().filter_map(|e| e.surfaced.as_ref())
    }

    pub fn seq_of(&self, card_id: &str) -> Option<usize> {
        self.session.cards().iter().position(|c| c.id == card_id)
    }
}

struct Slot {
    writer: Mutex<()>,
    state: RwLock<Arc<SessionState>>,
}

/// Outcome of a commit closure: cards to append and the index line to record.
pub struct Commit<T> {
    pub session: Session,
    pub new_cards: usize,
    pub index: Option<IndexEntry>,
    pub value: T,
}

pub struct Store {
    dir: PathBuf,
    slots: RwLock<BTreeMap<String, Arc<Slot>>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !id.starts_with('.')
}

impl Store {
    /// Opens (creating if needed) a data directory and loads every session in it.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| AtlasError::io(&dir, e))?;
        let probe = dir.join(".atlas-write-probe");
        File::create(&probe)
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| AtlasError::io(&dir, e))?;

        let mut slots = BTreeMap::new();
        let entries = std::fs::read_dir(&dir).map_err(|e| AtlasError::io(&dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| AtlasError::io(&dir, e))?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if name.ends_with(INDEX_SUFFIX) || path.extension().and_then(|e| e.to_str()) != Some(SESSION_EXT) {
                continue;
            }
            drop_torn_tail(&path)?;
            let file = File::open(&path).map_err(|e| AtlasError::io(&path, e))?;
            let session = format::load_session(BufReader::new(file)).map_err(|e| AtlasError::InFile {
                path: path.clone(),
                source: Box::new(e),
            })?;
            let index_path = dir.join(format!("{}{INDEX_SUFFIX}", session.id()));
            drop_torn_tail(&index_path)?;
            // An entry whose card never reached the session file is dropped.
            let index = read_index(&index_path)?
                .into_iter()
                .filter(|e| {
                    session.card(&e.card_id).is_some()
                        && e.provocation_id.as_ref().is_none_or(|p| session.card(p).is_some())
                })
                .collect();
            slots.insert(
                session.id().to_string(),
                Arc::new(Slot {
                    writer: Mutex::new(()),
                    state: RwLock::new(Arc::new(SessionState { session, index })),
                }),
            );
        }
        Ok(Store {
            dir,
            slots: RwLock::new(slots),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.{SESSION_EXT}"))
    }

    fn index_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}{INDEX_SUFFIX}"))
    }

    /// Persists a new, possibly non-empty, session.
    pub fn insert_session(&self, session: Session) -> Result<Arc<SessionState>> {
        if !valid_id(session.id()) {
            return Err(AtlasError::InvalidRequest(format!(
                "session id {:?} must be 1-128 characters of [A-Za-z0-9._-]",
                session.id()
            )));
        }
        let mut slots = self.slots.write().expect("store lock poisoned");
        if slots.contains_key(session.id()) {
            return Err(AtlasError::SessionExists(session.id().to_string()));
        }
        let path = self.session_path(session.id());
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => AtlasError::SessionExists(session.id().to_string()),
                _ => AtlasError::io(&path, e),
            })?;
        file.write_all(&format::export_session_bytes(&session))
            .and_then(|_| file.sync_all())
            .map_err(|e| AtlasError::io(&path, e))?;
        let state = Arc::new(SessionState {
            session,
            index: Vec::new(),
        });
        slots.insert(
            state.session.id().to_string(),
            Arc::new(Slot {
                writer: Mutex::new(()),
                state: RwLock::new(state.clone()),
            }),
        );
        Ok(state)
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>> {
        self.slots
            .read()
            .expect("store lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| AtlasError::SessionNotFound(id.to_string()))
    }

    pub fn snapshot(&self, id: &str) -> Result<Arc<SessionState>> {
        Ok(self.slot(id)?.state.read().expect("slot lock poisoned").clone())
    }

    pub fn snapshots(&self) -> Vec<Arc<SessionState>> {
        let slots: Vec<Arc<Slot>> = self.slots.read().expect("store lock poisoned").values().cloned().collect();
        slots
            .iter()
            .map(|s| s.state.read().expect("slot lock poisoned").clone())
            .collect()
    }

    pub fn learner_snapshots(&self, learner: &str) -> Vec<Arc<SessionState>> {
        self.snapshots()
            .into_iter()
            .filter(|s| s.session.learner_id() == learner)
            .collect()
    }

    pub fn find_card(&self, card_id: &str) -> Result<(Arc<SessionState>, DataCard)> {
        self.snapshots()
            .into_iter()
            .find_map(|s| s.session.card(card_id).cloned().map(|c| (s.clone(), c)))
            .ok_or_else(|| AtlasError::CardNotFound(card_id.to_string()))
    }

    /// Runs `f` under the session's write lock and durably appends whatever it
    /// produced before publishing the new snapshot.
    ///
    /// `f` may return `Ok(Err(value))` to finish without writing anything.
    pub fn commit<T>(
        &self,
        id: &str,
        f: impl FnOnce(&SessionState) -> Result<std::result::Result<Commit<T>, T>>,
    ) -> Result<T> {
        let slot = self.slot(id)?;
        let _guard = slot.writer.lock().expect("writer lock poisoned");
        let current = slot.state.read().expect("slot lock poisoned").clone();
        let commit = match f(&current)? {
            Ok(c) => c,
            Err(value) => return Ok(value),
        };
        let cards = commit.session.cards();
        let fresh = &cards[cards.len() - commit.new_cards..];
        let mut bytes = Vec::new();
        for c in fresh {
            bytes.extend_from_slice(format::card_line(c).as_bytes());
            bytes.push(b'\n');
        }
        append_durably(&self.session_path(id), &bytes)?;
        let mut index = current.index.clone();
        if let Some(entry) = commit.index {
            let mut line = serde_json::to_string(&entry).expect("serializable index entry");
            line.push('\n');
            append_durably(&self.index_path(id), line.as_bytes())?;
            index.push(entry);
        }
        *slot.state.write().expect("slot lock poisoned") = Arc::new(SessionState {
            session: commit.session,
            index,
        });
        Ok(commit.value)
    }
}

/// Appends and syncs. On failure the file is cut back to its old length so
/// a later append does not land after half a record.
fn append_durably(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = OpenOptions::new()
        .append(true)
        .create(true)
        .open(path)
        .map_err(|e| AtlasError::io(path, e))?;
    let len = file.metadata().map_err(|e| AtlasError::io(path, e))?.len();
    file.write_all(bytes).and_then(|_| file.sync_data()).map_err(|e| {
        let _ = file.set_len(len);
        AtlasError::io(path, e)
    })
}

/// Truncates a partial last line left by a crash mid-append. Such a line was
/// never acknowledged, so dropping it loses nothing a client was promised.
fn drop_torn_tail(path: &Path) -> Result<()> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(AtlasError::io(path, e)),
    };
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    tracing::warn!(path = %path.display(), dropped = bytes.len() - keep, "dropping torn trailing record");
    let file = OpenOptions::new().write(true).open(path).map_err(|e| AtlasError::io(path, e))?;
    file.set_len(keep as u64)
        .and_then(|_| file.sync_all())
        .map_err(|e| AtlasError::io(path, e))
}

fn read_index(path: &Path) -> Result<Vec<IndexEntry>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(AtlasError::io(path, e)),
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AtlasError::Format {
                line: i + 1,
                message: format!("bad index entry in {}: {e}", path.display()),
            })
        })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use field_atlas_core::fixture;

    #[test]
    fn ids_are_filesystem_safe() {
        assert!(valid_id("met-760"));
        assert!(valid_id("a_b.c"));
        assert!(!valid_id(""));
        assert!(!valid_id("../etc"));
        assert!(!valid_id("a/b"));
        assert!(!valid_id(".hidden"));
    }

    #[test]
    fn reopen_reproduces_sessions() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.insert_session(fixture::maya_met_session()).unwrap();
        assert!(matches!(
            store.insert_session(fixture::maya_met_session()),
            Err(AtlasError::SessionExists(_))
        ));
        drop(store);
        let store = Store::open(dir.path()).unwrap();
        let snap = store.snapshot(fixture::MET_SESSION).unwrap();
        assert_eq!(snap.session, fixture::maya_met_session());
        assert!(store.find_card(fixture::MET_ICE_CARD).is_ok());
        assert!(matches!(store.snapshot("nope"), Err(AtlasError::SessionNotFound(_))));
    }

    #[test]
    fn torn_tail_is_dropped_on_open() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.insert_session(fixture::maya_met_session()).unwrap();
        drop(store);
        let path = dir.path().join(format!("{}.jsonl", fixture::MET_SESSION));
        let clean = std::fs::read(&path).unwrap();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"id\":\"met-760-00").unwrap();
        drop(f);
        let store = Store::open(dir.path()).unwrap();
        assert_eq!(store.snapshot(fixture::MET_SESSION).unwrap().session, fixture::maya_met_session());
        assert_eq!(std::fs::read(&path).unwrap(), clean);
    }
}
