use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lru::LruCache;
use parking_lot::Mutex;

use super::meta::DatasetMeta;
use super::plane::{Plane, RegionRect};
use super::pyramid::{decode_tile, tile_path, TileSource, TileValue};
use crate::error::{Error, Result};

pub const DEFAULT_CACHE_TILES_PER_CHANNEL: usize = 256;

#[derive(Debug, Clone, Copy)]
pub struct OpenOptions {
    pub cache_tiles_per_channel: usize,
}

impl Default for OpenOptions {
    fn default() -> Self {
        Self {
            cache_tiles_per_channel: DEFAULT_CACHE_TILES_PER_CHANNEL,
        }
    }
}

type TileKey = (TileSource, u32, u64, u64);

/// Open dataset: metadata plus lazy, cached tile reads. Cheap to share
/// behind an `Arc`; reads take `&self`.
pub struct DatasetHandle {
    root: PathBuf,
    meta: DatasetMeta,
    intensity_cache: Mutex<LruCache<TileKey, Arc<Vec<u16>>>>,
    mask_cache: Mutex<LruCache<TileKey, Arc<Vec<u32>>>>,
}

impl std::fmt::Debug for DatasetHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DatasetHandle")
            .field("root", &self.root)
            .field("meta", &self.meta)
            .finish_non_exhaustive()
    }
}

pub fn open_dataset(path: impl AsRef<Path>) -> Result<DatasetHandle> {
    DatasetHandle::open_with(path, OpenOptions::default())
}

trait CacheFor<T> {
    fn cache(&self) -> &Mutex<LruCache<TileKey, Arc<Vec<T>>>>;
}

impl CacheFor<u16> for DatasetHandle {
    fn cache(&self) -> &Mutex<LruCache<TileKey, Arc<Vec<u16>>>> {
        &self.intensity_cache
    }
}

impl CacheFor<u32> for DatasetHandle {
    fn cache(&self) -> &Mutex<LruCache<TileKey, Arc<Vec<u32>>>> {
        &self.mask_cache
    }
}

impl DatasetHandle {
    pub fn open_with(path: impl AsRef<Path>, options: OpenOptions) -> Result<Self> {
        let root = path.as_ref().to_path_buf();
        let meta = DatasetMeta::load(&root)?;
        let per_channel = options.cache_tiles_per_channel.max(1);
        let intensity_cap = NonZeroUsize::new(per_channel * meta.channels.len().max(1)).unwrap();
        let mask_cap = NonZeroUsize::new(per_channel).unwrap();
        Ok(Self {
            root,
            meta,
            intensity_cache: Mutex::new(LruCache::new(intensity_cap)),
            mask_cache: Mutex::new(LruCache::new(mask_cap)),
        })
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Tiles currently resident: `(intensity, mask)`.
    pub fn cached_tiles(&self) -> (usize, usize) {
        (
            self.intensity_cache.lock().len(),
            self.mask_cache.lock().len(),
        )
    }

    pub fn cache_capacity(&self) -> (usize, usize) {
        (
            self.intensity_cache.lock().cap().get(),
            self.mask_cache.lock().cap().get(),
        )
    }

    fn check_region(&self, region: &RegionRect) -> Result<()> {
        let (w, h) = if region.level < self.meta.levels {
            self.meta.level_dims(region.level)
        } else {
            (0, 0)
        };
        let ok = region.level < self.meta.levels
            && region.x0 < region.x1
            && region.x1 <= w
            && region.y0 < region.y1
            && region.y1 <= h;
        if ok {
            Ok(())
        } else {
            Err(Error::Bounds {
                region: region.to_string(),
                level: region.level,
                width: w,
                height: h,
            })
        }
    }

    fn load_tile<T: TileValue>(
        &self,
        source: &TileSource,
        level: u32,
        tx: u64,
        ty: u64,
    ) -> Result<Arc<Vec<T>>>
    where
        Self: CacheFor<T>,
    {
        let key = (source.clone(), level, tx, ty);
        if let Some(tile) = self.cache().lock().get(&key) {
            return Ok(Arc::clone(tile));
        }
        let path = tile_path(&self.root, source, level, tx, ty);
        let bytes = std::fs::read(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::Integrity(format!("tile {} is missing", path.display()))
            } else {
                Error::io(&path, e)
            }
        })?;
        let (tw, th) = self.meta.tile_dims(level, tx, ty);
        let expected = (tw * th) as usize * T::BYTES;
        if bytes.len() != expected {
            return Err(Error::Integrity(format!(
                "tile {} has {} bytes, expected {expected}",
                path.display(),
                bytes.len()
            )));
        }
        let tile = Arc::new(decode_tile::<T>(&bytes));
        self.cache().lock().put(key, Arc::clone(&tile));
        Ok(tile)
    }

    /// Raw tile contents at `(level, tx, ty)`, row-major with the tile's
    /// truncated extent.
    pub fn read_tile(
        &self,
        channel: &str,
        level: u32,
        tx: u64,
        ty: u64,
    ) -> Result<(u64, u64, Arc<Vec<u16>>)> {
        self.channel_source(channel)?;
        if level >= self.meta.levels {
            return Err(Error::Lookup {
                what: "level",
                name: level.to_string(),
            });
        }
        let (cols, rows) = self.meta.tile_grid(level);
        if tx >= cols || ty >= rows {
            return Err(Error::Lookup {
                what: "tile",
                name: format!("{tx}_{ty} at level {level}"),
            });
        }
        let (tw, th) = self.meta.tile_dims(level, tx, ty);
        let tile =
            self.load_tile::<u16>(&TileSource::Channel(channel.to_string()), level, tx, ty)?;
        Ok((tw, th, tile))
    }

    fn channel_source(&self, channel: &str) -> Result<TileSource> {
        if self.meta.channel_index(channel).is_none() {
            return Err(Error::Lookup {
                what: "channel",
                name: channel.to_string(),
            });
        }
        Ok(TileSource::Channel(channel.to_string()))
    }

    fn assemble<T: TileValue>(&self, source: &TileSource, region: &RegionRect) -> Result<Plane<T>>
    where
        Self: CacheFor<T>,
    {
        self.check_region(region)?;
        let t = u64::from(self.meta.tile_size);
        let (w, h) = (region.width() as usize, region.height() as usize);
        let mut out = Plane::<T>::new(w, h);
        for ty in region.y0 / t..=(region.y1 - 1) / t {
            for tx in region.x0 / t..=(region.x1 - 1) / t {
                let tile = self.load_tile::<T>(source, region.level, tx, ty)?;
                let (tw, _) = self.meta.tile_dims(region.level, tx, ty);
                let (ox, oy) = (tx * t, ty * t);
                let sx0 = region.x0.max(ox);
                let sx1 = region.x1.min(ox + tw);
                let sy0 = region.y0.max(oy);
                let sy1 = region.y1.min(oy + t);
                for y in sy0..sy1 {
                    let src_row = ((y - oy) * tw) as usize;
                    let src = &tile[src_row + (sx0 - ox) as usize..src_row + (sx1 - ox) as usize];
                    let dst = out.row_mut((y - region.y0) as usize);
                    dst[(sx0 - region.x0) as usize..(sx1 - region.x0) as usize]
                        .copy_from_slice(src);
                }
            }
        }
        Ok(out)
    }

    pub fn read_region(&self, channel: &str, region: &RegionRect) -> Result<Plane<u16>> {
        let source = self.channel_source(channel)?;
        self.assemble(&source, region)
    }

    pub fn read_mask_region(&self, region: &RegionRect) -> Result<Plane<u32>> {
        if !self.meta.has_mask {
            return Err(Error::Capability("dataset has no segmentation mask".into()));
        }
        self.assemble(&TileSource::Mask, region)
    }

    /// Whole plane of one level; intended for small levels and tests.
    pub fn read_level(&self, channel: &str, level: u32) -> Result<Plane<u16>> {
        let (w, h) = self
            .meta
            .level_dims(level.min(self.meta.levels.saturating_sub(1)));
        self.read_region(channel, &RegionRect::new(level, 0, 0, w, h))
    }
}
