use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::meta::{DatasetMeta, META_FILE};
use super::plane::Plane;
use crate::error::{Error, Result};

/// Which pyramid a tile belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TileSource {
    Channel(String),
    Mask,
}

pub fn tile_path(root: &Path, source: &TileSource, level: u32, tx: u64, ty: u64) -> PathBuf {
    let dir = match source {
        TileSource::Channel(name) => root.join("channels").join(name),
        TileSource::Mask => root.join("mask"),
    };
    dir.join(level.to_string()).join(format!("{tx}_{ty}.bin"))
}

/// Next-level intensity plane: mean of each 2x2 block, rounded half-up,
/// ignoring pixels that fall past an odd edge.
pub fn downsample_mean(src: &Plane<u16>) -> Plane<u16> {
    let (w, h) = src.dims();
    let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
    Plane::from_fn(nw, nh, |x, y| {
        let mut sum = 0u32;
        let mut n = 0u32;
        for sy in 2 * y..(2 * y + 2).min(h) {
            for sx in 2 * x..(2 * x + 2).min(w) {
                sum += u32::from(src.get(sx, sy));
                n += 1;
            }
        }
        ((sum + n / 2) / n) as u16
    })
}

/// Label of a 2x2 block: most frequent nonzero ID, ties to the smallest ID,
/// 0 when the block is all background.
pub fn block_label(labels: &[u32]) -> u32 {
    let mut best = 0u32;
    let mut best_count = 0usize;
    for &candidate in labels {
        if candidate == 0 {
            continue;
        }
        let count = labels.iter().filter(|&&l| l == candidate).count();
        if count > best_count || (count == best_count && candidate < best) {
            best = candidate;
            best_count = count;
        }
    }
    best
}

pub fn downsample_labels(src: &Plane<u32>) -> Plane<u32> {
    let (w, h) = src.dims();
    let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
    let mut block = Vec::with_capacity(4);
    Plane::from_fn(nw, nh, |x, y| {
        block.clear();
        for sy in 2 * y..(2 * y + 2).min(h) {
            for sx in 2 * x..(2 * x + 2).min(w) {
                block.push(src.get(sx, sy));
            }
        }
        block_label(&block)
    })
}

/// Little-endian tile element.
pub trait TileValue: Copy + Default + Send + Sync + 'static {
    const BYTES: usize;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl TileValue for u16 {
    const BYTES: usize = 2;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        u16::from_le_bytes([bytes[0], bytes[1]])
    }
}

impl TileValue for u32 {
    const BYTES: usize = 4;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]])
    }
}

pub(crate) fn decode_tile<T: TileValue>(bytes: &[u8]) -> Vec<T> {
    bytes.chunks_exact(T::BYTES).map(T::read_le).collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Writes the chunked on-disk format one pyramid at a time, so only one
/// full-resolution plane has to be resident.
pub struct PyramidWriter {
    root: PathBuf,
    meta: DatasetMeta,
    written: Vec<bool>,
    mask_written: bool,
}

impl PyramidWriter {
    pub fn create(root: impl Into<PathBuf>, meta: DatasetMeta) -> Result<Self> {
        meta.validate()?;
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let written = vec![false; meta.channels.len()];
        Ok(Self {
            root,
            meta,
            written,
            mask_written: false,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    fn check_dims<T>(&self, plane: &Plane<T>, what: &str) -> Result<()>
    where
        T: Copy + Default,
    {
        let expected = (self.meta.width_px as usize, self.meta.height_px as usize);
        if plane.dims() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{what} is {}x{} but the dataset is {}x{}",
                plane.width(),
                plane.height(),
                expected.0,
                expected.1
            )));
        }
        Ok(())
    }

    pub fn write_channel(&mut self, name: &str, level0: Plane<u16>) -> Result<()> {
        let idx = self.meta.channel_index(name).ok_or_else(|| Error::Lookup {
            what: "channel",
            name: name.to_string(),
        })?;
        self.check_dims(&level0, &format!("channel `{name}`"))?;
        let source = TileSource::Channel(name.to_string());
        let mut plane = level0;
        for level in 0..self.meta.levels {
            if level > 0 {
                plane = downsample_mean(&plane);
            }
            self.write_level(&source, level, &plane)?;
        }
        self.written[idx] = true;
        Ok(())
    }

    pub fn write_mask(&mut self, level0: Plane<u32>) -> Result<()> {
        if !self.meta.has_mask {
            return Err(Error::Capability(
                "dataset was declared without a mask".into(),
            ));
        }
        self.check_dims(&level0, "mask")?;
        let mut plane = level0;
        for level in 0..self.meta.levels {
            if level > 0 {
                plane = downsample_labels(&plane);
            }
            self.write_level(&TileSource::Mask, level, &plane)?;
        }
        self.mask_written = true;
        Ok(())
    }

    fn write_level<T: TileValue>(
        &self,
        source: &TileSource,
        level: u32,
        plane: &Plane<T>,
    ) -> Result<()> {
        let t = self.meta.tile_size as usize;
        let (cols, rows) = self.meta.tile_grid(level);
        let mut buf = Vec::new();
        for ty in 0..rows {
            for tx in 0..cols {
                let x0 = tx as usize * t;
                let y0 = ty as usize * t;
                let x1 = (x0 + t).min(plane.width());
                let y1 = (y0 + t).min(plane.height());
                buf.clear();
                for y in y0..y1 {
                    for &v in &plane.row(y)[x0..x1] {
                        v.write_le(&mut buf);
                    }
                }
                write_file(&tile_path(&self.root, source, level, tx, ty), &buf)?;
            }
        }
        Ok(())
    }

    /// Writes meta.json once every declared plane has been written.
    pub fn finish(self) -> Result<PathBuf> {
        if let Some(i) = self.written.iter().position(|w| !w) {
            return Err(Error::InvalidArgument(format!(
                "channel `{}` was never written",
                self.meta.channels[i].name
            )));
        }
        if self.meta.has_mask && !self.mask_written {
            return Err(Error::InvalidArgument("mask was never written".into()));
        }
        let path = self.root.join(META_FILE);
        write_file(&path, self.meta.to_json().as_bytes())?;
        Ok(self.root)
    }
}
