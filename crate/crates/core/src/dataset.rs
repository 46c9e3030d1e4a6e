use std::path::Path;

use crate::cell_features::{compute_region_stats, CellTable, RegionStats, SpatialIndex, TypeOrder};
use crate::error::Result;
use crate::geometry::LensGeometry;
use crate::image_store::{DatasetHandle, DatasetMeta, OpenOptions, CELLS_FILE};

/// An opened dataset: image pyramid plus the single-cell table and its
/// spatial index, all immutable after opening.
#[derive(Debug)]
pub struct Dataset {
    handle: DatasetHandle,
    table: CellTable,
    index: SpatialIndex,
}

impl Dataset {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(path, OpenOptions::default())
    }

    pub fn open_with(path: impl AsRef<Path>, options: OpenOptions) -> Result<Self> {
        let handle = DatasetHandle::open_with(path, options)?;
        let table = CellTable::load(&handle.root().join(CELLS_FILE), handle.meta())?;
        let index = SpatialIndex::build(&table);
        Ok(Self {
            handle,
            table,
            index,
        })
    }

    pub fn handle(&self) -> &DatasetHandle {
        &self.handle
    }

    pub fn meta(&self) -> &DatasetMeta {
        self.handle.meta()
    }

    pub fn table(&self) -> &CellTable {
        &self.table
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }

    pub fn region_stats(
        &self,
        geometry: &LensGeometry,
        channels: &[String],
        order: TypeOrder,
    ) -> Result<RegionStats> {
        compute_region_stats(
            &self.table,
            &self.index,
            geometry,
            channels,
            order,
            self.meta().pixel_size_um,
        )
    }
}
