use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use classrefine_core::detmetrics::{BoxJitter, Detection, EvalDataset};
use classrefine_core::refine::{read_events, EventLog, RefineEngine, Session};
use classrefine_core::store::{parse_detections, parse_ground_truth, EmbeddingSource};
use serde::Deserialize;
use uuid::Uuid;

use crate::error::ApiError;

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 50 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Session logs (`<id>.jsonl`) and dataset uploads (`datasets/<id>.json`).
    pub log_dir: Option<PathBuf>,
    pub max_upload_bytes: usize,
    pub top_k: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            log_dir: None,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            top_k: classrefine_core::concepts::DEFAULT_TOP_K,
        }
    }
}

/// One session: an exclusive writer guard plus the latest published
/// snapshot, which readers clone without waiting on the writer.
pub struct SessionSlot {
    pub(crate) writer: tokio::sync::Mutex<Option<EventLog>>,
    snapshot: RwLock<Arc<Session>>,
}

impl SessionSlot {
    fn new(session: Session, log: Option<EventLog>) -> Self {
        Self {
            writer: tokio::sync::Mutex::new(log),
            snapshot: RwLock::new(Arc::new(session)),
        }
    }

    pub fn snapshot(&self) -> Arc<Session> {
        self.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub(crate) fn publish(&self, session: Session) {
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(session);
    }
}

/// Uploaded evaluation data.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub id: String,
    pub ground_truth: EvalDataset,
    pub detections: Option<Vec<Detection>>,
    pub category: Option<String>,
    pub score_floor: f64,
    pub jitter: BoxJitter,
}

#[derive(Debug, Deserialize)]
pub(crate) struct DatasetUpload {
    pub ground_truth: serde_json::Value,
    #[serde(default)]
    pub detections: Option<serde_json::Value>,
    #[serde(default)]
    pub category: Option<String>,
    #[serde(default)]
    pub score_floor: Option<f64>,
    #[serde(default)]
    pub jitter: Option<BoxJitter>,
}

impl Dataset {
    pub(crate) fn from_upload(id: String, up: DatasetUpload) -> Result<Self, ApiError> {
        let ground_truth = parse_ground_truth(&up.ground_truth.to_string())?;
        let detections = match up.detections {
            Some(d) => Some(parse_detections(&d.to_string(), Some(&ground_truth))?),
            None => None,
        };
        let score_floor = up.score_floor.unwrap_or(0.0);
        if !(-1.0..=1.0).contains(&score_floor) {
            return Err(ApiError::invalid("score_floor must lie in [-1, 1]"));
        }
        if let Some(c) = &up.category {
            if c.trim().is_empty() {
                return Err(ApiError::invalid("category must be nonempty"));
            }
        }
        Ok(Self {
            id,
            ground_truth,
            detections,
            category: up.category,
            score_floor,
            jitter: up.jitter.unwrap_or_default(),
        })
    }
}

pub struct AppState {
    pub engine: RefineEngine,
    pub source: Arc<dyn EmbeddingSource>,
    pub config: ServiceConfig,
    sessions: RwLock<HashMap<Uuid, Arc<SessionSlot>>>,
    datasets: RwLock<HashMap<String, Arc<Dataset>>>,
}

impl AppState {
    /// Builds the state, replaying any session logs and dataset uploads
    /// found under the configured log directory.
    pub fn new(engine: RefineEngine, source: Arc<dyn EmbeddingSource>, config: ServiceConfig) -> Result<Self, String> {
        let state = Self {
            engine,
            source,
            config,
            sessions: RwLock::new(HashMap::new()),
            datasets: RwLock::new(HashMap::new()),
        };
        if let Some(dir) = state.config.log_dir.clone() {
            state.restore(&dir)?;
        }
        Ok(state)
    }

    fn restore(&self, dir: &Path) -> Result<(), String> {
        let datasets = dir.join("datasets");
        std::fs::create_dir_all(&datasets).map_err(|e| format!("{}: {e}", datasets.display()))?;
        for path in sorted_files(dir, "jsonl")? {
            let events = read_events(&path).map_err(|e| e.to_string())?;
            let session = self
                .engine
                .replay(&events)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            let log = EventLog::open(&path).map_err(|e| e.to_string())?;
            self.insert_session(session, Some(log));
        }
        for path in sorted_files(&datasets, "json")? {
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let upload: DatasetUpload =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            let ds = Dataset::from_upload(id, upload).map_err(|e| format!("{}: {}", path.display(), e.message))?;
            self.insert_dataset(ds);
        }
        Ok(())
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub(crate) fn insert_session(&self, session: Session, log: Option<EventLog>) {
        let id = session.id;
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, Arc::new(SessionSlot::new(session, log)));
    }

    pub fn slot(&self, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        let uuid = Uuid::parse_str(id).map_err(|_| ApiError::unknown_session(id))?;
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(&uuid)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    pub(crate) fn insert_dataset(&self, ds: Dataset) {
        self.datasets
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(ds.id.clone(), Arc::new(ds));
    }

    pub fn dataset(&self, id: &str) -> Result<Arc<Dataset>, ApiError> {
        self.datasets
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_dataset(id))
    }
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, String> {
    let entries = std::fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == ext))
        .collect();
    out.sort();
    Ok(out)
}
