use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::cell_features::{RegionStats, TypeOrder};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{level0_to_level, LensGeometry};
use crate::image_store::{DatasetHandle, DatasetMeta, Plane, RegionRect};
use crate::raster::encode_rgba;
use crate::render::{render_view, ChannelSet, LensMode, LensState, Magnifier, Rgba};

pub const THUMBNAIL_MAX_EDGE: usize = 256;

/// Viewer position: centre in level-0 pixels, zoom in screen pixels per
/// level-0 pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewportState {
    pub center: [f64; 2],
    pub zoom: f64,
}

impl ViewportState {
    pub fn validate(&self) -> Result<()> {
        if !(self.zoom.is_finite() && self.zoom > 0.0) {
            return Err(Error::InvalidArgument(
                "viewport zoom must be positive".into(),
            ));
        }
        if !self.center.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "viewport centre must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Everything a capture records and a restore gives back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureState {
    pub viewport: ViewportState,
    pub context_channel_set: ChannelSet,
    pub lens: LensState,
}

mod thumbnail_b64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        STANDARD
            .decode(text.as_bytes())
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RichSnapshot {
    pub id: String,
    pub title: String,
    pub description: String,
    pub created_at: String,
    pub dataset_meta_hash: String,
    /// Level-0 pixel coordinates.
    pub geometry: LensGeometry,
    pub viewport: ViewportState,
    pub lens_channel_set: ChannelSet,
    pub context_channel_set: ChannelSet,
    pub lens_mode: LensMode,
    pub magnifier: Magnifier,
    pub mag_factor: f64,
    pub plateau_fraction: f64,
    pub blend_alpha: f64,
    /// Ascending.
    pub cell_ids: Vec<u32>,
    pub stats: RegionStats,
    /// PNG bytes, base64 in JSON.
    #[serde(with = "thumbnail_b64")]
    pub thumbnail: Vec<u8>,
}

impl RichSnapshot {
    pub fn lens_state(&self) -> LensState {
        LensState {
            geometry: self.geometry,
            mode: self.lens_mode,
            magnifier: self.magnifier,
            mag_factor: self.mag_factor,
            plateau_fraction: self.plateau_fraction,
            lens_channel_set: self.lens_channel_set.clone(),
            blend_alpha: self.blend_alpha,
        }
    }

    pub fn capture_state(&self) -> CaptureState {
        CaptureState {
            viewport: self.viewport,
            context_channel_set: self.context_channel_set.clone(),
            lens: self.lens_state(),
        }
    }

    /// Channels whose per-cell histograms the stats carry.
    pub fn stats_channels(&self) -> Vec<String> {
        self.lens_channel_set
            .channels()
            .map(str::to_string)
            .collect()
    }

    /// Writes `{id}.json` (thumbnail inline) and `{id}.png` into `dir`.
    pub fn export(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join(format!("{}.json", self.id));
        let png = dir.join(format!("{}.png", self.id));
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
        std::fs::write(&png, &self.thumbnail).map_err(|e| Error::io(&png, e))?;
        Ok((json, png))
    }
}

/// Capture timestamp in nanoseconds followed by four random bytes, as hex.
pub fn new_snapshot_id() -> String {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    format!("{nanos:016x}{:08x}", rand::random::<u32>())
}

/// Region of `level` covering the lens bounding box, clipped to the plane.
fn lens_region(meta: &DatasetMeta, geometry: &LensGeometry, level: u32) -> Option<RegionRect> {
    let (w, h) = meta.level_dims(level);
    let (cx, cy) = geometry.center();
    let (hw, hh) = geometry.half_extents();
    let x0 = level0_to_level(cx - hw, level).floor().max(0.0);
    let y0 = level0_to_level(cy - hh, level).floor().max(0.0);
    let x1 = (level0_to_level(cx + hw, level).ceil() + 1.0).min(w as f64);
    let y1 = (level0_to_level(cy + hh, level).ceil() + 1.0).min(h as f64);
    (x1 > x0 && y1 > y0).then(|| RegionRect::new(level, x0 as u64, y0 as u64, x1 as u64, y1 as u64))
}

fn shrink_nearest(img: &Plane<Rgba>, max_edge: usize) -> Plane<Rgba> {
    let (w, h) = img.dims();
    let edge = w.max(h);
    if edge <= max_edge {
        return img.clone();
    }
    let nw = (w * max_edge).div_ceil(edge).max(1);
    let nh = (h * max_edge).div_ceil(edge).max(1);
    Plane::from_fn(nw, nh, |x, y| img.get(x * w / nw, y * h / nh))
}

/// PNG of the lens region rendered with the given settings, at most
/// [`THUMBNAIL_MAX_EDGE`] pixels on its longer side.
pub fn render_thumbnail(
    handle: &DatasetHandle,
    context: &ChannelSet,
    lens: &LensState,
) -> Result<Vec<u8>> {
    lens.validate()?;
    let meta = handle.meta();
    let (hw, hh) = lens.geometry.half_extents();
    let edge = 2.0 * hw.max(hh) + 1.0;
    let mut level = 0;
    while level + 1 < meta.levels && edge / f64::from(1u32 << level) > THUMBNAIL_MAX_EDGE as f64 {
        level += 1;
    }
    let region = lens_region(meta, &lens.geometry, level)
        .ok_or_else(|| Error::InvalidArgument("lens lies outside the image".into()))?;
    let frame = render_view(handle, &region, context, Some(lens))?;
    encode_rgba(&shrink_nearest(&frame, THUMBNAIL_MAX_EDGE))
}

/// Captures the current lens and view: cells inside the lens, their
/// statistics for the lens channels, and a thumbnail.
pub fn create_snapshot(
    dataset: &Dataset,
    state: &CaptureState,
    title: impl Into<String>,
    description: impl Into<String>,
) -> Result<RichSnapshot> {
    state.viewport.validate()?;
    state.context_channel_set.validate()?;
    state.lens.validate()?;
    let lens = &state.lens;
    let channels: Vec<String> = lens
        .lens_channel_set
        .channels()
        .map(str::to_string)
        .collect();
    let stats = dataset.region_stats(&lens.geometry, &channels, TypeOrder::Locked)?;
    let thumbnail = render_thumbnail(dataset.handle(), &state.context_channel_set, lens)?;
    Ok(RichSnapshot {
        id: new_snapshot_id(),
        title: title.into(),
        description: description.into(),
        created_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        dataset_meta_hash: dataset.meta().hash(),
        geometry: lens.geometry,
        viewport: state.viewport,
        lens_channel_set: lens.lens_channel_set.clone(),
        context_channel_set: state.context_channel_set.clone(),
        lens_mode: lens.mode,
        magnifier: lens.magnifier,
        mag_factor: lens.mag_factor,
        plateau_fraction: lens.plateau_fraction,
        blend_alpha: lens.blend_alpha,
        cell_ids: stats.cell_ids.clone(),
        stats,
        thumbnail,
    })
}

/// What the viewer applies on restore.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestoreDelta {
    pub viewport: ViewportState,
    pub context_channel_set: ChannelSet,
    pub lens: LensState,
    pub cell_ids: Vec<u32>,
    /// Present only for a stats-trusting restore.
    pub stats: Option<RegionStats>,
}

/// State to re-apply for `snapshot` on the dataset described by `meta`.
/// With `trust_stats`, the stored statistics are handed back as well, which
/// requires the snapshot to come from the identical dataset.
pub fn restore(
    snapshot: &RichSnapshot,
    meta: &DatasetMeta,
    trust_stats: bool,
) -> Result<RestoreDelta> {
    let sets = [&snapshot.lens_channel_set, &snapshot.context_channel_set];
    for name in sets.iter().flat_map(|s| s.channels()) {
        if meta.channel_index(name).is_none() {
            return Err(Error::MissingChannel(name.to_string()));
        }
    }
    let stats = if trust_stats {
        let current = meta.hash();
        if current != snapshot.dataset_meta_hash {
            return Err(Error::DatasetMismatch {
                snapshot: snapshot.dataset_meta_hash.clone(),
                current,
            });
        }
        Some(snapshot.stats.clone())
    } else {
        None
    };
    let state = snapshot.capture_state();
    Ok(RestoreDelta {
        viewport: state.viewport,
        context_channel_set: state.context_channel_set,
        lens: state.lens,
        cell_ids: snapshot.cell_ids.clone(),
        stats,
    })
}
