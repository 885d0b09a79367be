//! In-memory sessions with optional directory-backed persistence.
//!
//! Layout of a persisted session:
//!
//! ```text
//! <dir>/<session_id>/source.csv
//! <dir>/<session_id>/target.csv
//! <dir>/<session_id>/session.json      {"key": ..., "type_hints": {...}}
//! <dir>/<session_id>/runs/<run_id>.json {"request": ..., "ranked": ...}
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::http::StatusCode;
use serde::{Deserialize, Serialize};

use chardiff::discovery::RankedSummaries;
use chardiff::snapshot::{align, read_snapshot, AlignedPair, LoadOptions, TypeHint};

use crate::error::{ApiError, ApiResult};

/// Body of `POST /sessions/{id}/runs`. Missing fields take the engine
/// defaults; missing pools come from the shortlist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    pub target: String,
    #[serde(default)]
    pub cond_attrs: Option<Vec<String>>,
    #[serde(default)]
    pub tran_attrs: Option<Vec<String>>,
    #[serde(default)]
    pub c: Option<usize>,
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default)]
    pub top_n: Option<usize>,
    /// Shortlist threshold used when a pool is omitted.
    #[serde(default)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Run {
    pub id: String,
    pub request: RunRequest,
    pub ranked: RankedSummaries,
}

#[derive(Debug, Serialize, Deserialize)]
struct SessionMeta {
    key: String,
    type_hints: BTreeMap<String, TypeHint>,
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub key: String,
    pub pair: AlignedPair,
    source_csv: String,
    target_csv: String,
    type_hints: BTreeMap<String, TypeHint>,
    runs: RwLock<BTreeMap<String, Arc<Run>>>,
}

impl Session {
    fn build(
        id: String,
        source_csv: String,
        target_csv: String,
        key: String,
        type_hints: BTreeMap<String, TypeHint>,
    ) -> ApiResult<Session> {
        let opts = LoadOptions::new(key.clone()).with_hints(type_hints.clone());
        let bad = |e| ApiError::snapshot(&e, StatusCode::BAD_REQUEST);
        let source = read_snapshot(source_csv.as_bytes(), &opts).map_err(bad)?;
        let target = read_snapshot(target_csv.as_bytes(), &opts).map_err(bad)?;
        let pair = align(&source, &target, &key).map_err(bad)?;
        Ok(Session {
            id,
            key,
            pair,
            source_csv,
            target_csv,
            type_hints,
            runs: RwLock::new(BTreeMap::new()),
        })
    }

    pub fn run(&self, run_id: &str) -> Option<Arc<Run>> {
        self.runs.read().expect("runs lock").get(run_id).cloned()
    }

    pub fn run_ids(&self) -> Vec<String> {
        self.runs.read().expect("runs lock").keys().cloned().collect()
    }
}

/// 128 random bits from the OS-seeded thread generator, as hex.
pub fn new_id() -> String {
    format!("{:032x}", rand::random::<u128>())
}

pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        SessionStore {
            sessions: RwLock::new(HashMap::new()),
            dir: None,
        }
    }

    /// Store persisted under `dir`, rehydrating whatever is already there.
    /// Unreadable session directories are skipped with a warning.
    pub fn persistent(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut sessions = HashMap::new();
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        entries.sort();
        for path in entries {
            match load_session(&path) {
                Ok(s) => {
                    sessions.insert(s.id.clone(), Arc::new(s));
                }
                Err(e) => log::warn!("skipping session at {}: {e}", path.display()),
            }
        }
        log::info!("loaded {} sessions from {}", sessions.len(), dir.display());
        Ok(SessionStore {
            sessions: RwLock::new(sessions),
            dir: Some(dir),
        })
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("sessions lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> ApiResult<Arc<Session>> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))
    }

    pub fn create(
        &self,
        source_csv: String,
        target_csv: String,
        key: String,
        type_hints: BTreeMap<String, TypeHint>,
    ) -> ApiResult<Arc<Session>> {
        let session = Arc::new(Session::build(new_id(), source_csv, target_csv, key, type_hints)?);
        if let Some(dir) = &self.dir {
            save_session(&dir.join(&session.id), &session)
                .map_err(|e| ApiError::internal(format!("persisting session: {e}")))?;
        }
        self.sessions
            .write()
            .expect("sessions lock")
            .insert(session.id.clone(), session.clone());
        Ok(session)
    }

    pub fn add_run(&self, session: &Session, request: RunRequest, ranked: RankedSummaries) -> ApiResult<Arc<Run>> {
        let run = Arc::new(Run {
            id: new_id(),
            request,
            ranked,
        });
        if let Some(dir) = &self.dir {
            let path = dir.join(&session.id).join("runs");
            fs::create_dir_all(&path)
                .and_then(|_| write_json(&path.join(format!("{}.json", run.id)), run.as_ref()))
                .map_err(|e| ApiError::internal(format!("persisting run: {e}")))?;
        }
        session
            .runs
            .write()
            .expect("runs lock")
            .insert(run.id.clone(), run.clone());
        Ok(run)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let text = serde_json::to_string(value).map_err(io::Error::other)?;
    fs::write(path, text)
}

fn save_session(dir: &Path, s: &Session) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("source.csv"), &s.source_csv)?;
    fs::write(dir.join("target.csv"), &s.target_csv)?;
    write_json(
        &dir.join("session.json"),
        &SessionMeta {
            key: s.key.clone(),
            type_hints: s.type_hints.clone(),
        },
    )
}

fn load_session(dir: &Path) -> Result<Session, String> {
    let id = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or("directory name is not UTF-8")?
        .to_string();
    let read = |name: &str| fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"));
    let meta: SessionMeta = serde_json::from_str(&read("session.json")?).map_err(|e| e.to_string())?;
    let session = Session::build(id, read("source.csv")?, read("target.csv")?, meta.key, meta.type_hints)
        .map_err(|e| e.body.message)?;
    let runs_dir = dir.join("runs");
    if runs_dir.is_dir() {
        let mut runs = session.runs.write().expect("runs lock");
        for entry in fs::read_dir(&runs_dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
            let run: Run = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            runs.insert(run.id.clone(), Arc::new(run));
        }
    }
    Ok(session)
}

#[cfg(test)]
mod tests {
    use chardiff::discovery::{run_pipeline, DiscoveryConfig};
    use chardiff::frame::Frame;

    use super::*;

    const Y2016: &str = include_str!("../../core/data/employees_2016.csv");
    const Y2017: &str = include_str!("../../core/data/employees_2017.csv");

    #[test]
    fn ids_are_128_bit_hex() {
        let a = new_id();
        assert_eq!(a.len(), 32);
        assert!(a.chars().all(|c| c.is_ascii_hexdigit()));
        assert_ne!(a, new_id());
    }

    #[test]
    fn run_requests_reject_unknown_fields() {
        let ok: RunRequest = serde_json::from_str(r#"{"target": "bonus", "alpha": 1.0}"#).unwrap();
        assert_eq!(ok.alpha, Some(1.0));
        assert!(ok.cond_attrs.is_none());
        assert!(serde_json::from_str::<RunRequest>(r#"{"target": "bonus", "beta": 1}"#).is_err());
    }

    #[test]
    fn persisted_sessions_reload_with_their_runs() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::persistent(dir.path()).unwrap();
        let s = store
            .create(Y2016.into(), Y2017.into(), "name".into(), BTreeMap::new())
            .unwrap();
        let frame = Frame::new(&s.pair, "bonus").unwrap();
        let config = DiscoveryConfig::new("bonus").with_pools(["edu"], ["bonus"]);
        let ranked = run_pipeline(&frame, &config).unwrap();
        let request: RunRequest = serde_json::from_str(r#"{"target": "bonus"}"#).unwrap();
        let run = store.add_run(&s, request, ranked).unwrap();

        let again = SessionStore::persistent(dir.path()).unwrap();
        assert_eq!(again.len(), 1);
        let s2 = again.get(&s.id).unwrap();
        assert_eq!(s2.run_ids(), vec![run.id.clone()]);
        let r2 = s2.run(&run.id).unwrap();
        assert_eq!(
            serde_json::to_string(&r2.ranked).unwrap(),
            serde_json::to_string(&run.ranked).unwrap()
        );
    }

    #[test]
    fn broken_session_directories_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("junk")).unwrap();
        let store = SessionStore::persistent(dir.path()).unwrap();
        assert!(store.is_empty());
        assert_eq!(store.get("junk").unwrap_err().status, StatusCode::NOT_FOUND);
    }
}
