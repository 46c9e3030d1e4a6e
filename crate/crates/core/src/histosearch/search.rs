use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::contours::{extract_contours, ContourSet};
use super::integral::{lens_histogram, quantize, IntegralHistogram, DEFAULT_BINS};
use super::simmap::{fill_map, window_half, Block, SimilarityMap};
use crate::error::{Error, Result};
use crate::geometry::LensGeometry;
use crate::image_store::{DatasetHandle, RegionRect};
use crate::render::ChannelRenderSetting;

pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const DEFAULT_SEARCH_TILE: usize = 512;

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

/// Search inputs shared by both scopes. `geometry` is in level-0 pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRequest {
    pub channels: Vec<ChannelRenderSetting>,
    pub geometry: LensGeometry,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

impl SearchRequest {
    pub fn new(
        channels: Vec<ChannelRenderSetting>,
        geometry: LensGeometry,
        threshold: f64,
    ) -> Self {
        Self {
            channels,
            geometry,
            threshold,
            bins: DEFAULT_BINS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::InvalidArgument(
                "search needs at least one channel".into(),
            ));
        }
        for c in &self.channels {
            c.validate()?;
        }
        self.geometry.validate()?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidArgument(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if !(2..=256).contains(&self.bins) {
            return Err(Error::InvalidArgument(format!(
                "bin count {} outside 2..=256",
                self.bins
            )));
        }
        Ok(())
    }
}

/// Similarity map over a rectangle of one pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub level: u32,
    /// Top-left pixel of the map in level coordinates.
    pub origin: (u64, u64),
    pub map: SimilarityMap,
}

impl RegionMap {
    pub fn contours(&self, threshold: f64) -> Result<ContourSet> {
        let mut set = extract_contours(&self.map, threshold)?;
        set.level = self.level;
        set.origin = [self.origin.0 as f64, self.origin.1 as f64];
        Ok(set)
    }
}

/// Unit-mass lens histograms per channel, taken from `level` with the exact
/// lens shape.
pub fn lens_distributions(
    handle: &DatasetHandle,
    req: &SearchRequest,
    level: u32,
) -> Result<Vec<Vec<f64>>> {
    let (w, h) = handle.meta().level_dims(level);
    let g = req.geometry.at_level(level);
    let (cx, cy) = g.center();
    let (hw, hh) = g.half_extents();
    let x0 = (cx - hw).floor().max(0.0);
    let y0 = (cy - hh).floor().max(0.0);
    let x1 = ((cx + hw).ceil() + 1.0).min(w as f64);
    let y1 = ((cy + hh).ceil() + 1.0).min(h as f64);
    if x1 <= x0 || y1 <= y0 {
        return Err(Error::InvalidArgument(
            "lens does not intersect the image".into(),
        ));
    }
    let rect = RegionRect::new(level, x0 as u64, y0 as u64, x1 as u64, y1 as u64);
    let local = g.with_center(cx - x0, cy - y0);
    let mut out = Vec::with_capacity(req.channels.len());
    for s in &req.channels {
        let q = quantize(&handle.read_region(&s.channel, &rect)?, s, req.bins)?;
        let hist = lens_histogram(&q, &local);
        if hist.total() == 0 {
            return Err(Error::InvalidArgument(
                "lens covers no pixel of the image".into(),
            ));
        }
        out.push(hist.normalized());
    }
    Ok(out)
}

/// Similarity map of `region`, computed tile by tile straight from the
/// store. Each tile reads its core plus a window-sized halo, so the values do
/// not depend on `tile`.
pub fn region_map(
    handle: &DatasetHandle,
    region: &RegionRect,
    req: &SearchRequest,
    tile: usize,
) -> Result<RegionMap> {
    req.validate()?;
    let level = region.level;
    if level >= handle.meta().levels {
        return Err(Error::Bounds {
            region: region.to_string(),
            level,
            width: 0,
            height: 0,
        });
    }
    let (lw, lh) = handle.meta().level_dims(level);
    if region.x1 > lw || region.y1 > lh || region.width() == 0 || region.height() == 0 {
        return Err(Error::Bounds {
            region: region.to_string(),
            level,
            width: lw,
            height: lh,
        });
    }
    let lens = lens_distributions(handle, req, level)?;
    let half = window_half(&req.geometry.at_level(level));
    let (pw, ph) = (lw as usize, lh as usize);
    let (rx0, ry0, rx1, ry1) = (
        region.x0 as usize,
        region.y0 as usize,
        region.x1 as usize,
        region.y1 as usize,
    );
    let mut map = SimilarityMap::new(rx1 - rx0, ry1 - ry0, req.channels.len());
    let tile = tile.max(1);
    for ty0 in (ry0..ry1).step_by(tile) {
        for tx0 in (rx0..rx1).step_by(tile) {
            let core = (tx0, ty0, (tx0 + tile).min(rx1), (ty0 + tile).min(ry1));
            let bx0 = core.0.saturating_sub(half.0);
            let by0 = core.1.saturating_sub(half.1);
            let bx1 = (core.2 + half.0).min(pw);
            let by1 = (core.3 + half.1).min(ph);
            let rect = RegionRect::new(level, bx0 as u64, by0 as u64, bx1 as u64, by1 as u64);
            let integrals = req
                .channels
                .iter()
                .map(|s| {
                    IntegralHistogram::build(&quantize(
                        &handle.read_region(&s.channel, &rect)?,
                        s,
                        req.bins,
                    )?)
                })
                .collect::<Result<Vec<_>>>()?;
            let block = Block {
                integrals: &integrals,
                origin: (bx0, by0),
            };
            fill_map(&block, &lens, half, (pw, ph), core, (rx0, ry0), &mut map);
        }
    }
    Ok(RegionMap {
        level,
        origin: (region.x0, region.y0),
        map,
    })
}

pub fn viewport_map(
    handle: &DatasetHandle,
    viewport: &RegionRect,
    req: &SearchRequest,
) -> Result<RegionMap> {
    region_map(handle, viewport, req, DEFAULT_SEARCH_TILE)
}

/// Level-0 map of the whole image; `tile` defaults to [`DEFAULT_SEARCH_TILE`].
pub fn whole_image_map(
    handle: &DatasetHandle,
    req: &SearchRequest,
    tile: Option<usize>,
) -> Result<RegionMap> {
    let meta = handle.meta();
    let all = RegionRect::new(0, 0, 0, meta.width_px, meta.height_px);
    region_map(handle, &all, req, tile.unwrap_or(DEFAULT_SEARCH_TILE))
}

/// Contours of the viewport's similarity map, on the viewport's level.
pub fn search_viewport(
    handle: &DatasetHandle,
    viewport: &RegionRect,
    req: &SearchRequest,
) -> Result<ContourSet> {
    viewport_map(handle, viewport, req)?.contours(req.threshold)
}

pub fn search_whole_image(
    handle: &DatasetHandle,
    req: &SearchRequest,
    tile: Option<usize>,
) -> Result<ContourSet> {
    whole_image_map(handle, req, tile)?.contours(req.threshold)
}

impl ContourSet {
    /// GeoJSON FeatureCollection in level-0 pixel coordinates. Each outer ring
    /// becomes a Polygon carrying the holes it directly encloses.
    pub fn to_geojson(&self) -> Value {
        let rings = self.level0_contours();
        let outers: Vec<usize> = (0..rings.len()).filter(|&i| !rings[i].is_hole()).collect();
        let mut holes: Vec<Vec<usize>> = vec![Vec::new(); outers.len()];
        for (i, r) in rings.iter().enumerate().filter(|(_, r)| r.is_hole()) {
            let [x, y] = r.points[0];
            let parent = outers
                .iter()
                .enumerate()
                .filter(|(_, &o)| rings[o].winds_around(x, y))
                .min_by(|a, b| rings[*a.1].area.total_cmp(&rings[*b.1].area))
                .map(|(k, _)| k);
            if let Some(k) = parent {
                holes[k].push(i);
            }
        }
        let features: Vec<Value> = outers
            .iter()
            .zip(&holes)
            .map(|(&o, hs)| {
                let mut coords = vec![rings[o].points.clone()];
                coords.extend(hs.iter().map(|&h| rings[h].points.clone()));
                let area = rings[o].area + hs.iter().map(|&h| rings[h].area).sum::<f64>();
                json!({
                    "type": "Feature",
                    "geometry": {"type": "Polygon", "coordinates": coords},
                    "properties": {
                        "similarity_threshold": self.threshold,
                        "area_px": area,
                    },
                })
            })
            .collect();
        json!({
            "type": "FeatureCollection",
            "properties": {"similarity_threshold": self.threshold, "level": self.level},
            "features": features,
        })
    }
}
