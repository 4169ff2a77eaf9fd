//! Session registry and on-disk layout.
//!
//! Each persisted session lives in `<data-dir>/<id>/`:
//!
//! - `corpus.csv`: the corpus as uploaded, including imported labels
//! - `config.json`: the session configuration
//! - `journal.jsonl`: every label submission, appended and synced
//! - `truth.json`: ground truth, when attached
//! - `continued`: present once the reviewer chose to keep screening past the target

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use fastscreen_core::corpus::{export_csv, import_csv, Journal};
use fastscreen_core::engine::SessionSnapshot;
use fastscreen_core::metrics::GroundTruth;
use fastscreen_core::{Corpus, Error, Result, Session, SessionConfig, StopReason};

const CORPUS_FILE: &str = "corpus.csv";
const CONFIG_FILE: &str = "config.json";
const JOURNAL_FILE: &str = "journal.jsonl";
const TRUTH_FILE: &str = "truth.json";
const CONTINUED_FILE: &str = "continued";

/// One session: a writer lock around the engine plus the latest published
/// snapshot, which readers use without waiting for the writer.
pub struct SessionEntry {
    pub id: String,
    session: Mutex<Session>,
    snapshot: RwLock<Arc<SessionSnapshot>>,
    truth: Option<GroundTruth>,
    dir: Option<PathBuf>,
}

impl SessionEntry {
    fn new(id: String, session: Session, truth: Option<GroundTruth>, dir: Option<PathBuf>) -> Self {
        let snapshot = RwLock::new(Arc::new(session.snapshot()));
        SessionEntry {
            id,
            session: Mutex::new(session),
            snapshot,
            truth,
            dir,
        }
    }

    /// Latest consistent state, published after every write.
    pub fn snapshot(&self) -> Arc<SessionSnapshot> {
        let guard = self.snapshot.read().unwrap_or_else(|e| e.into_inner());
        Arc::clone(&guard)
    }

    pub fn truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    /// Runs `f` under the writer lock, then publishes a new snapshot.
    pub fn write<T>(&self, f: impl FnOnce(&mut Session) -> Result<T>) -> Result<T> {
        let mut session = self
            .session
            .lock()
            .map_err(|_| Error::State("session lock poisoned by an earlier failure".into()))?;
        let out = f(&mut session);
        let snap = Arc::new(session.snapshot());
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = snap;
        out
    }

    /// Reopens a target-stopped session and remembers that on disk.
    pub fn continue_screening(&self) -> Result<()> {
        self.write(|s| s.continue_screening())?;
        if let Some(dir) = &self.dir {
            let path = dir.join(CONTINUED_FILE);
            fs::write(&path, b"").map_err(|e| Error::Io { path, source: e })?;
        }
        Ok(())
    }
}

/// All sessions known to the server.
pub struct SessionStore {
    data_dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<SessionEntry>>>,
}

impl SessionStore {
    /// Sessions kept in memory only.
    pub fn in_memory() -> Self {
        SessionStore {
            data_dir: None,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    /// Sessions persisted under `data_dir`; existing ones are resumed.
    /// A session directory that fails to load is skipped with a warning.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self> {
        let data_dir = data_dir.into();
        fs::create_dir_all(&data_dir).map_err(|e| io(&data_dir, e))?;
        let mut sessions = HashMap::new();
        let mut dirs: Vec<PathBuf> = fs::read_dir(&data_dir)
            .map_err(|e| io(&data_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(CONFIG_FILE).is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            let Some(id) = dir.file_name().and_then(|n| n.to_str()).map(str::to_owned) else {
                continue;
            };
            match load(&dir) {
                Ok((session, truth)) => {
                    tracing::info!(session = %id, labeled = session.corpus().n_labeled(), "resumed session");
                    sessions.insert(id.clone(), Arc::new(SessionEntry::new(id, session, truth, Some(dir))));
                }
                Err(err) => tracing::warn!(session = %id, "cannot resume session: {err}"),
            }
        }
        Ok(SessionStore {
            data_dir: Some(data_dir),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    /// Starts a session over `corpus` under a fresh id.
    pub fn create(
        &self,
        corpus: Corpus,
        config: SessionConfig,
        truth: Option<GroundTruth>,
    ) -> Result<Arc<SessionEntry>> {
        if let Some(t) = &truth {
            if t.len() != corpus.len() {
                return Err(Error::Validation(format!(
                    "ground truth has {} entries for {} documents",
                    t.len(),
                    corpus.len()
                )));
            }
        }
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut session = Session::start(corpus, config)?;
        let dir = match &self.data_dir {
            Some(root) => {
                let dir = root.join(&id);
                persist(&dir, &session, truth.as_ref())?;
                session.attach_journal(Journal::open(dir.join(JOURNAL_FILE))?);
                Some(dir)
            }
            None => None,
        };
        let entry = Arc::new(SessionEntry::new(id.clone(), session, truth, dir));
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id.clone(), Arc::clone(&entry));
        tracing::info!(session = %id, "created session");
        Ok(entry)
    }

    pub fn get(&self, id: &str) -> Option<Arc<SessionEntry>> {
        self.sessions.read().unwrap_or_else(|e| e.into_inner()).get(id).cloned()
    }

    /// Session ids in lexicographic order.
    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }
}

fn io(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn persist(dir: &Path, session: &Session, truth: Option<&GroundTruth>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    export_csv(session.corpus(), dir.join(CORPUS_FILE))?;
    if let Some(t) = truth {
        write_json(&dir.join(TRUTH_FILE), &t.as_slice())?;
    }
    // written last: a directory without it is not a session
    write_json(&dir.join(CONFIG_FILE), session.config())
}

fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
    fs::write(path, text).map_err(|e| io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn load(dir: &Path) -> Result<(Session, Option<GroundTruth>)> {
    let config: SessionConfig = read_json(&dir.join(CONFIG_FILE))?;
    let corpus = import_csv(dir.join(CORPUS_FILE))?.corpus;
    let truth_path = dir.join(TRUTH_FILE);
    let truth = if truth_path.is_file() {
        Some(GroundTruth::new(read_json(&truth_path)?))
    } else {
        None
    };
    let mut session = Session::resume(corpus, config, dir.join(JOURNAL_FILE))?;
    if dir.join(CONTINUED_FILE).exists() && session.stop_reason() == Some(StopReason::TargetReached) {
        session.continue_screening()?;
    }
    Ok((session, truth))
}

#[cfg(test)]
mod tests {
    use fastscreen_core::{Decision, DocId};

    use super::*;

    fn corpus() -> Corpus {
        Corpus::from_texts([("alpha beta", "x"), ("gamma delta", "y"), ("beta gamma", "z")])
    }

    #[test]
    fn snapshot_follows_writes_and_failed_writes_leave_it_unchanged() {
        let store = SessionStore::in_memory();
        let entry = store.create(corpus(), SessionConfig::default(), None).unwrap();
        assert_eq!(entry.snapshot().stats.n_labeled, 0);
        entry
            .write(|s| s.submit_labels(&[(DocId(0), Decision::Included)]))
            .unwrap();
        assert_eq!(entry.snapshot().stats.n_labeled, 1);
        assert!(entry
            .write(|s| s.submit_labels(&[(DocId(1), Decision::Excluded), (DocId(9), Decision::Excluded)]))
            .is_err());
        assert_eq!(entry.snapshot().stats.n_labeled, 1);
        assert_eq!(store.get(&entry.id).unwrap().id, entry.id);
        assert!(store.get("missing").is_none());
    }

    #[test]
    fn truth_must_cover_the_corpus() {
        let store = SessionStore::in_memory();
        let err = store
            .create(corpus(), SessionConfig::default(), Some(GroundTruth::new(vec![true])))
            .err()
            .unwrap();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        assert!(store.ids().is_empty());
    }

    #[test]
    fn unreadable_session_dirs_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let kept = store
            .create(corpus(), SessionConfig::default(), None)
            .unwrap()
            .id
            .clone();
        let broken = dir.path().join("broken");
        fs::create_dir(&broken).unwrap();
        fs::write(broken.join(CONFIG_FILE), "{ not json").unwrap();
        fs::create_dir(dir.path().join("stray")).unwrap();
        let reopened = SessionStore::open(dir.path()).unwrap();
        assert_eq!(reopened.ids(), vec![kept]);
    }
}
