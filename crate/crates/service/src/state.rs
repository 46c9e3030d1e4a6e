use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tissuelens::snapshots::{SnapshotStore, SNAPSHOT_FILE};
use tissuelens::{Dataset, Result};

use crate::error::{ApiError, ApiResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Pending,
    Done,
    Failed,
}

/// Status document returned by `GET /api/search/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub id: String,
    pub state: JobState,
    #[serde(default)]
    pub result: Option<Value>,
    #[serde(default)]
    pub error: Option<ApiError>,
}

#[derive(Debug)]
pub(crate) struct Loaded {
    pub dataset: Arc<Dataset>,
    pub snapshots: Arc<tokio::sync::Mutex<SnapshotStore>>,
}

/// Shared server state: at most one dataset, its snapshot store and the
/// whole-image search jobs.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    loaded: Arc<RwLock<Option<Arc<Loaded>>>>,
    jobs: Arc<Mutex<HashMap<String, JobStatus>>>,
    search_tile: Option<usize>,
}

impl AppState {
    /// State with no dataset; every data endpoint answers 404.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Opens the dataset at `dir` with its snapshot store next to it.
    pub fn open(dir: &Path) -> Result<Self> {
        let state = Self::empty();
        state.load(dir)?;
        Ok(state)
    }

    /// Tile edge for whole-image search jobs (the engine default when unset).
    pub fn with_search_tile(mut self, tile: Option<usize>) -> Self {
        self.search_tile = tile;
        self
    }

    pub fn load(&self, dir: &Path) -> Result<()> {
        let dataset = Dataset::open(dir)?;
        let store = SnapshotStore::open_or_create(dir.join(SNAPSHOT_FILE), dataset.meta().hash())?;
        let loaded = Loaded {
            dataset: Arc::new(dataset),
            snapshots: Arc::new(tokio::sync::Mutex::new(store)),
        };
        *self.loaded.write().expect("state lock poisoned") = Some(Arc::new(loaded));
        Ok(())
    }

    pub fn dataset(&self) -> Option<Arc<Dataset>> {
        self.loaded().ok().map(|l| Arc::clone(&l.dataset))
    }

    pub(crate) fn loaded(&self) -> ApiResult<Arc<Loaded>> {
        self.loaded
            .read()
            .expect("state lock poisoned")
            .clone()
            .ok_or_else(|| ApiError::not_found("no dataset loaded"))
    }

    pub(crate) fn search_tile(&self) -> Option<usize> {
        self.search_tile
    }

    pub(crate) fn put_job(&self, status: JobStatus) {
        self.jobs
            .lock()
            .expect("job lock poisoned")
            .insert(status.id.clone(), status);
    }

    pub fn job(&self, id: &str) -> Option<JobStatus> {
        self.jobs
            .lock()
            .expect("job lock poisoned")
            .get(id)
            .cloned()
    }
}
