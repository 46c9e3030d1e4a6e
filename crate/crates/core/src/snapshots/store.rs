use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::snapshot::RichSnapshot;
use crate::error::{Error, Result};

pub const SNAPSHOT_FILE: &str = "snapshots.json";
pub const SCHEMA_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoreFile {
    schema_version: u64,
    dataset_meta_hash: String,
    snapshots: Vec<RichSnapshot>,
}

/// Ordered snapshots of one dataset, optionally backed by a JSON file.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotStore {
    path: Option<PathBuf>,
    dataset_meta_hash: String,
    snapshots: Vec<RichSnapshot>,
}

/// Case-insensitive substring match over title and description, keeping
/// capture order.
pub fn filter_snapshots<'a>(snapshots: &'a [RichSnapshot], query: &str) -> Vec<&'a RichSnapshot> {
    let q = query.to_lowercase();
    snapshots
        .iter()
        .filter(|s| {
            s.title.to_lowercase().contains(&q) || s.description.to_lowercase().contains(&q)
        })
        .collect()
}

impl SnapshotStore {
    pub fn new(dataset_meta_hash: impl Into<String>) -> Self {
        Self {
            path: None,
            dataset_meta_hash: dataset_meta_hash.into(),
            snapshots: Vec::new(),
        }
    }

    /// Loads `path` if it exists, otherwise starts an empty store bound to it.
    pub fn open_or_create(
        path: impl Into<PathBuf>,
        dataset_meta_hash: impl Into<String>,
    ) -> Result<Self> {
        let path = path.into();
        if path.exists() {
            return Self::load(&path);
        }
        let mut store = Self::new(dataset_meta_hash);
        store.path = Some(path);
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut store = Self::from_json(&text)?;
        store.path = Some(path.to_path_buf());
        Ok(store)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| {
            if e.is_eof() {
                Error::Integrity(format!("snapshot file is truncated: {e}"))
            } else {
                Error::Integrity(format!("snapshot file is not valid JSON: {e}"))
            }
        })?;
        let version = value
            .get("schema_version")
            .ok_or_else(|| Error::schema("schema_version", "missing field"))?
            .as_u64()
            .ok_or_else(|| Error::schema("schema_version", "must be an unsigned integer"))?;
        if version != SCHEMA_VERSION {
            return Err(Error::Migration {
                found: version,
                expected: SCHEMA_VERSION,
            });
        }
        let file: StoreFile = serde_path_to_error::deserialize(value)
            .map_err(|e| Error::schema(e.path().to_string(), e.into_inner().to_string()))?;
        let mut seen = HashSet::new();
        for (i, s) in file.snapshots.iter().enumerate() {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Integrity(format!(
                    "snapshots[{i}]: duplicate id `{}`",
                    s.id
                )));
            }
        }
        Ok(Self {
            path: None,
            dataset_meta_hash: file.dataset_meta_hash,
            snapshots: file.snapshots,
        })
    }

    pub fn to_json(&self) -> String {
        let file = StoreFile {
            schema_version: SCHEMA_VERSION,
            dataset_meta_hash: self.dataset_meta_hash.clone(),
            snapshots: self.snapshots.clone(),
        };
        serde_json::to_string_pretty(&file).expect("snapshots serialize")
    }

    /// Writes to the backing file through a temporary sibling and a rename,
    /// so readers never observe a partial file.
    pub fn save(&self) -> Result<()> {
        let path = self
            .path
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("snapshot store has no backing file".into()))?;
        self.save_to(path)
    }

    pub fn save_to(&self, path: &Path) -> Result<()> {
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = dir.join(format!(
            ".{}.tmp{}",
            path.file_name()
                .and_then(|n| n.to_str())
                .unwrap_or(SNAPSHOT_FILE),
            std::process::id()
        ));
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(self.to_json().as_bytes())
            .map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn dataset_meta_hash(&self) -> &str {
        &self.dataset_meta_hash
    }

    pub fn snapshots(&self) -> &[RichSnapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&RichSnapshot> {
        self.snapshots.iter().find(|s| s.id == id)
    }

    /// Mutable access for editing annotation text in place.
    pub fn get_mut(&mut self, id: &str) -> Option<&mut RichSnapshot> {
        self.snapshots.iter_mut().find(|s| s.id == id)
    }

    pub fn insert(&mut self, snapshot: RichSnapshot) -> Result<()> {
        if self.get(&snapshot.id).is_some() {
            return Err(Error::InvalidArgument(format!(
                "snapshot id `{}` already exists",
                snapshot.id
            )));
        }
        self.snapshots.push(snapshot);
        Ok(())
    }

    pub fn remove(&mut self, id: &str) -> Option<RichSnapshot> {
        let i = self.snapshots.iter().position(|s| s.id == id)?;
        Some(self.snapshots.remove(i))
    }

    pub fn filter(&self, query: &str) -> Vec<&RichSnapshot> {
        filter_snapshots(&self.snapshots, query)
    }
}
