//! Rich snapshots: captured lens regions with their render settings, cells,
//! statistics, thumbnail and annotation text.

mod extend;
mod snapshot;
mod store;

pub use extend::{extend_search, search_request_for, ExtendResult};
pub use snapshot::{
    create_snapshot, new_snapshot_id, render_thumbnail, restore, CaptureState, RestoreDelta,
    RichSnapshot, ViewportState, THUMBNAIL_MAX_EDGE,
};
pub use store::{filter_snapshots, SnapshotStore, SCHEMA_VERSION, SNAPSHOT_FILE};
