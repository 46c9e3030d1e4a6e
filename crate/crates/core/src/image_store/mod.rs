//! On-disk chunked multi-resolution datasets.
//!
//! Layout of a dataset directory:
//!
//! ```text
//! meta.json
//! cells.csv
//! channels/{name}/{level}/{tx}_{ty}.bin   raw little-endian u16, row-major
//! mask/{level}/{tx}_{ty}.bin              raw little-endian u32, row-major
//! ```
//!
//! Edge tiles are truncated to the plane extent.

mod ingest;
mod meta;
mod plane;
mod pyramid;
mod store;
mod synthetic;

pub use ingest::{
    export_flat, ingest, read_tiff_u16, read_tiff_u32, write_tiff_u16, write_tiff_u32,
    IngestRequest, MASK_TIFF,
};
pub use meta::{
    level_count, level_dims, ChannelMeta, DatasetMeta, BIT_DEPTH, CELLS_FILE, DEFAULT_TILE_SIZE,
    META_FILE,
};
pub use plane::{Plane, RegionRect};
pub use pyramid::{
    block_label, downsample_labels, downsample_mean, tile_path, PyramidWriter, TileSource,
};
pub use store::{open_dataset, DatasetHandle, OpenOptions, DEFAULT_CACHE_TILES_PER_CHANNEL};
pub use synthetic::{
    generate_synthetic, GroundTruth, PlantedCell, PlantedPattern, SyntheticConfig,
    SyntheticDataset, CELL_TYPES, MANIFEST_FILE,
};
