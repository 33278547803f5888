use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use sha2::{Digest, Sha256};

use crate::engine::{GenerationResult, ModelInput};
use crate::retrieval::{Corpus, Document};

/// Server-side state for one query.
#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub query: String,
    pub corpus: Arc<Corpus>,
    /// Documents selected for generation, in rank order.
    pub documents: Vec<Document>,
    pub model_input: Arc<ModelInput>,
    pub last_result: Option<GenerationResult>,
}

/// Requests on one session queue on this lock in arrival order.
pub type SessionSlot = Arc<tokio::sync::Mutex<Session>>;

/// Where sessions live between requests.
pub trait SessionStore: Send + Sync {
    fn insert(&self, session: Session) -> SessionSlot;
    /// Looks a session up and marks it used. Expired sessions are dropped and
    /// reported missing.
    fn get(&self, id: &str) -> Option<SessionSlot>;
    /// Drops every expired session, returning how many went.
    fn sweep(&self) -> usize;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct Entry {
    slot: SessionSlot,
    last_used: Instant,
}

/// In-process store with an idle timeout.
pub struct MemoryStore {
    ttl: Duration,
    entries: Mutex<HashMap<String, Entry>>,
}

impl MemoryStore {
    pub fn new(ttl: Duration) -> Self {
        MemoryStore {
            ttl,
            entries: Mutex::new(HashMap::new()),
        }
    }

    fn expired(&self, entry: &Entry, now: Instant) -> bool {
        now.duration_since(entry.last_used) > self.ttl
    }
}

impl SessionStore for MemoryStore {
    fn insert(&self, session: Session) -> SessionSlot {
        let id = session.id.clone();
        let slot = Arc::new(tokio::sync::Mutex::new(session));
        self.entries.lock().insert(
            id,
            Entry {
                slot: slot.clone(),
                last_used: Instant::now(),
            },
        );
        slot
    }

    fn get(&self, id: &str) -> Option<SessionSlot> {
        let now = Instant::now();
        let mut entries = self.entries.lock();
        let entry = entries.get_mut(id)?;
        if self.expired(entry, now) {
            entries.remove(id);
            return None;
        }
        entry.last_used = now;
        Some(entry.slot.clone())
    }

    fn sweep(&self) -> usize {
        let now = Instant::now();
        let mut entries = self.entries.lock();
        let before = entries.len();
        entries.retain(|_, e| !self.expired(e, now));
        before - entries.len()
    }

    fn len(&self) -> usize {
        self.entries.lock().len()
    }
}

/// Session ids derived from a seed and a counter: unique within a server,
/// and reproducible across restarts with the same seed.
pub struct SessionIds {
    seed: u64,
    next: AtomicU64,
}

impl SessionIds {
    pub fn new(seed: u64) -> Self {
        SessionIds {
            seed,
            next: AtomicU64::new(0),
        }
    }

    pub fn next_id(&self) -> String {
        let n = self.next.fetch_add(1, Ordering::Relaxed);
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(n.to_le_bytes());
        hex::encode(&hasher.finalize()[..16])
    }
}
