use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const META_FILE: &str = "meta.json";
pub const CELLS_FILE: &str = "cells.csv";
pub const DEFAULT_TILE_SIZE: u32 = 1024;
pub const BIT_DEPTH: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelMeta {
    pub name: String,
    #[serde(default)]
    pub modality_group: Option<String>,
}

impl ChannelMeta {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            modality_group: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub width_px: u64,
    pub height_px: u64,
    /// Microns per level-0 pixel.
    pub pixel_size_um: f64,
    pub tile_size: u32,
    pub levels: u32,
    pub channels: Vec<ChannelMeta>,
    pub has_mask: bool,
}

/// Number of pyramid levels: halve (rounding up) until the longer side fits
/// in one tile.
pub fn level_count(width_px: u64, height_px: u64, tile_size: u32) -> u32 {
    let mut side = width_px.max(height_px);
    let tile = u64::from(tile_size.max(1));
    let mut levels = 1;
    while side > tile {
        side = side.div_ceil(2);
        levels += 1;
    }
    levels
}

/// Plane dimensions of `level`: `ceil(dim / 2^level)`.
pub fn level_dims(width_px: u64, height_px: u64, level: u32) -> (u64, u64) {
    let div = 1u64 << level;
    (width_px.div_ceil(div), height_px.div_ceil(div))
}

impl DatasetMeta {
    pub fn new(
        width_px: u64,
        height_px: u64,
        pixel_size_um: f64,
        tile_size: u32,
        channels: Vec<ChannelMeta>,
        has_mask: bool,
    ) -> Result<Self> {
        let meta = Self {
            width_px,
            height_px,
            pixel_size_um,
            tile_size,
            levels: level_count(width_px, height_px, tile_size),
            channels,
            has_mask,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn level_dims(&self, level: u32) -> (u64, u64) {
        level_dims(self.width_px, self.height_px, level)
    }

    /// Tile grid extent `(columns, rows)` at `level`.
    pub fn tile_grid(&self, level: u32) -> (u64, u64) {
        let (w, h) = self.level_dims(level);
        let t = u64::from(self.tile_size);
        (w.div_ceil(t), h.div_ceil(t))
    }

    /// Pixel extent of tile `(tx, ty)`; edge tiles are truncated.
    pub fn tile_dims(&self, level: u32, tx: u64, ty: u64) -> (u64, u64) {
        let (w, h) = self.level_dims(level);
        let t = u64::from(self.tile_size);
        ((w - tx * t).min(t), (h - ty * t).min(t))
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    pub fn channel_names(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 {
            return Err(Error::schema("width_px", "must be positive"));
        }
        if self.height_px == 0 {
            return Err(Error::schema("height_px", "must be positive"));
        }
        if !(self.pixel_size_um.is_finite() && self.pixel_size_um > 0.0) {
            return Err(Error::schema("pixel_size_um", "must be a positive real"));
        }
        if self.tile_size == 0 || !self.tile_size.is_power_of_two() {
            return Err(Error::schema("tile_size", "must be a power of two"));
        }
        let expected = level_count(self.width_px, self.height_px, self.tile_size);
        if self.levels != expected {
            return Err(Error::schema(
                "levels",
                format!("is {} but dimensions imply {expected}", self.levels),
            ));
        }
        let mut seen = HashSet::new();
        for (i, ch) in self.channels.iter().enumerate() {
            let path = format!("channels[{i}].name");
            if ch.name.is_empty() {
                return Err(Error::schema(path, "must not be empty"));
            }
            if ch.name.contains(['/', '\\', ',']) || ch.name == "." || ch.name == ".." {
                return Err(Error::schema(
                    path,
                    format!("`{}` is not a valid channel name", ch.name),
                ));
            }
            if !seen.insert(ch.name.as_str()) {
                return Err(Error::schema(
                    path,
                    format!("duplicate channel `{}`", ch.name),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let meta: DatasetMeta = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::schema(path, e.into_inner().to_string())
        })?;
        meta.validate()?;
        Ok(meta)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(META_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::schema(META_FILE, format!("{} does not exist", path.display()))
            } else {
                Error::io(&path, e)
            }
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("meta serializes")
    }

    /// Hex SHA-256 of the canonical (compact) JSON form; identifies a dataset.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_vec(self).expect("meta serializes");
        hex::encode(Sha256::digest(&compact))
    }
}
