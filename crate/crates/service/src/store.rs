//! Session registry and JSONL persistence.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use corrduel::simlab::derive_seed;
use uuid::Uuid;

use crate::error::{Result, ServiceError};
use crate::event::SessionEvent;
use crate::session::{Command, CommandResult, LiveSession, SessionSpec};

const SESSION_SEED_STREAM: u64 = 0x5345_5353;

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub fn log_path(dir: &Path, session_id: &str) -> PathBuf {
    dir.join(format!("{session_id}.jsonl"))
}

/// Appends events to a session's log and flushes them to disk.
pub fn append_events(dir: &Path, session_id: &str, events: &[SessionEvent]) -> Result<()> {
    if events.is_empty() {
        return Ok(());
    }
    let path = log_path(dir, session_id);
    let storage = |e: std::io::Error| ServiceError::Storage(format!("{}: {e}", path.display()));
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(storage)?;
    let mut buf = String::new();
    for e in events {
        buf.push_str(&e.to_line());
        buf.push('\n');
    }
    file.write_all(buf.as_bytes()).map_err(storage)?;
    file.sync_data().map_err(storage)
}

/// Parses a JSONL log. A malformed line is reported with the sequence
/// number it should have carried.
pub fn read_log(path: &Path) -> Result<Vec<SessionEvent>> {
    let file =
        File::open(path).map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
    let mut events = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let event: SessionEvent = serde_json::from_str(&line).map_err(|e| {
            ServiceError::replay(events.len() as u64, format!("line {}: {e}", i + 1))
        })?;
        events.push(event);
    }
    Ok(events)
}

pub fn replay_file(path: &Path) -> Result<LiveSession> {
    LiveSession::replay(&read_log(path)?)
}

#[derive(Debug, Clone, Default)]
pub struct StoreConfig {
    /// Where session logs live. `None` keeps sessions in memory only.
    pub data_dir: Option<PathBuf>,
    pub server_seed: u64,
}

type Handle = Arc<RwLock<LiveSession>>;

/// All sessions known to the server. Mutations of one session are
/// serialized by its write lock; reads share the lock.
#[derive(Debug)]
pub struct SessionStore {
    config: StoreConfig,
    sessions: RwLock<HashMap<String, Handle>>,
    opened: AtomicU64,
}

impl SessionStore {
    /// Opens the store, replaying every log found in the data directory.
    pub fn open(config: StoreConfig) -> Result<Self> {
        let mut sessions = HashMap::new();
        if let Some(dir) = &config.data_dir {
            std::fs::create_dir_all(dir)
                .map_err(|e| ServiceError::Storage(format!("{}: {e}", dir.display())))?;
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| ServiceError::Storage(format!("{}: {e}", dir.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            paths.sort();
            for path in paths {
                let session = replay_file(&path).map_err(|e| match e {
                    ServiceError::Replay { seq, message } => {
                        ServiceError::replay(seq, format!("{}: {message}", path.display()))
                    }
                    other => other,
                })?;
                tracing::info!(
                    session = session.id(),
                    events = session.events().len(),
                    "recovered session"
                );
                sessions.insert(session.id().to_string(), Arc::new(RwLock::new(session)));
            }
        }
        let opened = AtomicU64::new(sessions.len() as u64);
        Ok(Self {
            config,
            sessions: RwLock::new(sessions),
            opened,
        })
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("registry lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Seed for the next session that does not bring its own.
    pub fn next_seed(&self) -> u64 {
        derive_seed(
            self.config.server_seed,
            SESSION_SEED_STREAM,
            self.opened.fetch_add(1, Ordering::SeqCst),
        )
    }

    pub fn create(&self, spec: SessionSpec) -> Result<LiveSession> {
        let id = Uuid::new_v4().simple().to_string();
        let session = LiveSession::create(id.clone(), spec, now_ms())?;
        if let Some(dir) = &self.config.data_dir {
            append_events(dir, &id, session.events())?;
        }
        let snapshot = session.clone();
        self.sessions
            .write()
            .expect("registry lock")
            .insert(id, Arc::new(RwLock::new(session)));
        Ok(snapshot)
    }

    fn handle(&self, id: &str) -> Result<Handle> {
        self.sessions
            .read()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    pub fn read<T>(&self, id: &str, f: impl FnOnce(&LiveSession) -> T) -> Result<T> {
        let handle = self.handle(id)?;
        let session = handle.read().expect("session lock");
        Ok(f(&session))
    }

    /// Executes a command and persists its events before returning. If the
    /// append fails the in-memory session is rolled back.
    pub fn execute(&self, id: &str, command: Command) -> Result<CommandResult> {
        let handle = self.handle(id)?;
        let mut session = handle.write().expect("session lock");
        let (result, events) = session.execute(command, now_ms())?;
        if let Some(dir) = &self.config.data_dir {
            if let Err(e) = append_events(dir, id, &events) {
                let kept = session.events().len() - events.len();
                *session = LiveSession::replay(&session.events()[..kept])?;
                return Err(e);
            }
        }
        Ok(result)
    }
}
