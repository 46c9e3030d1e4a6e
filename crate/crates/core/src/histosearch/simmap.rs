use rayon::prelude::*;

use super::integral::{lens_histogram, IntegralHistogram, QuantizedPlane};
use crate::error::{Error, Result};
use crate::geometry::LensGeometry;
use crate::image_store::Plane;

/// Largest per-channel chi-square between unit-mass histograms, so also the
/// largest channel mean.
pub const MAX_DISTANCE: f64 = 2.0;

/// Per-pixel similarity to the lens distribution, 1 = identical. Pixels whose
/// comparison window leaves the plane are flagged invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMap {
    pub values: Plane<f32>,
    pub valid: Plane<bool>,
    pub channels: usize,
}

impl SimilarityMap {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            values: Plane::new(width, height),
            valid: Plane::new(width, height),
            channels,
        }
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        self.valid.get(x, y).then(|| self.values.get(x, y))
    }

    pub fn valid_count(&self) -> usize {
        self.valid.as_slice().iter().filter(|&&v| v).count()
    }
}

/// Half extents of the per-pixel comparison window: the lens's bounding
/// square, snapped to whole pixels.
pub fn window_half(geometry: &LensGeometry) -> (usize, usize) {
    let (hw, hh) = geometry.half_extents();
    (hw.max(0.0).floor() as usize, hh.max(0.0).floor() as usize)
}

pub fn similarity_from_distance(d: f64) -> f32 {
    (1.0 - d / MAX_DISTANCE).clamp(0.0, 1.0) as f32
}

/// Integral histograms for one block of the plane, with the block origin.
pub(crate) struct Block<'a> {
    pub integrals: &'a [IntegralHistogram],
    pub origin: (usize, usize),
}

/// Fills the pixels `[core_x0, core_x1) × [core_y0, core_y1)` (whole plane
/// coordinates) of `out`, whose top-left pixel sits at `out_origin`. Every
/// valid pixel's window must lie inside the block.
pub(crate) fn fill_map(
    block: &Block<'_>,
    lens: &[Vec<f64>],
    half: (usize, usize),
    plane_dims: (usize, usize),
    core: (usize, usize, usize, usize),
    out_origin: (usize, usize),
    out: &mut SimilarityMap,
) {
    let (hw, hh) = half;
    let (pw, ph) = plane_dims;
    let (cx0, cy0, cx1, cy1) = core;
    let n = ((2 * hw + 1) * (2 * hh + 1)) as f64;
    let bins = lens.first().map_or(0, Vec::len);
    let channels = lens.len() as f64;
    let width = out.width();
    let (ox, oy) = block.origin;
    let (mx, my) = out_origin;

    let values = &mut out.values.as_mut_slice()[(cy0 - my) * width..(cy1 - my) * width];
    let valid = &mut out.valid.as_mut_slice()[(cy0 - my) * width..(cy1 - my) * width];
    values
        .par_chunks_mut(width)
        .zip(valid.par_chunks_mut(width))
        .enumerate()
        .for_each(|(row, (vals, oks))| {
            let y = cy0 + row;
            let mut counts = vec![0u32; bins];
            for x in cx0..cx1 {
                let o = x - mx;
                let inside = x >= hw && x + hw < pw && y >= hh && y + hh < ph;
                if !inside {
                    vals[o] = 0.0;
                    oks[o] = false;
                    continue;
                }
                let (wx0, wy0) = (x - hw - ox, y - hh - oy);
                let (wx1, wy1) = (x + hw + 1 - ox, y + hh + 1 - oy);
                let mut total = 0.0;
                for (ih, lens_c) in block.integrals.iter().zip(lens) {
                    ih.window_into(wx0, wy0, wx1, wy1, &mut counts);
                    let mut d = 0.0;
                    for (&c, &l) in counts.iter().zip(lens_c) {
                        let w = f64::from(c) / n;
                        let s = w + l;
                        if s > 0.0 {
                            let diff = w - l;
                            d += diff * diff / s;
                        }
                    }
                    total += d;
                }
                vals[o] = similarity_from_distance(total / channels);
                oks[o] = true;
            }
        });
}

pub(crate) fn check_planes(planes: &[QuantizedPlane]) -> Result<(usize, usize, usize)> {
    let first = planes
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one channel is required".into()))?;
    let dims = (first.width(), first.height());
    for p in planes {
        if (p.width(), p.height()) != dims {
            return Err(Error::DimensionMismatch(format!(
                "channel `{}` is {}x{}, expected {}x{}",
                p.channel,
                p.width(),
                p.height(),
                dims.0,
                dims.1
            )));
        }
        if p.bin_count != first.bin_count {
            return Err(Error::DimensionMismatch(
                "channels use different bin counts".into(),
            ));
        }
    }
    Ok((dims.0, dims.1, first.bin_count))
}

/// Untiled map over in-memory planes; `geometry` is in plane coordinates and
/// the lens histogram is taken from the same planes.
pub fn similarity_map(planes: &[QuantizedPlane], geometry: &LensGeometry) -> Result<SimilarityMap> {
    check_planes(planes)?;
    let lens: Vec<Vec<f64>> = planes
        .iter()
        .map(|p| lens_histogram(p, geometry).normalized())
        .collect();
    similarity_map_with_lens(planes, &lens, window_half(geometry), None)
}

/// Map against precomputed unit-mass lens histograms. With `tile` set, the
/// integral histograms are built per tile (plus a window-sized halo), which
/// bounds memory and yields identical values.
pub fn similarity_map_with_lens(
    planes: &[QuantizedPlane],
    lens: &[Vec<f64>],
    half: (usize, usize),
    tile: Option<usize>,
) -> Result<SimilarityMap> {
    let (w, h, bins) = check_planes(planes)?;
    if lens.len() != planes.len() || lens.iter().any(|l| l.len() != bins) {
        return Err(Error::DimensionMismatch(
            "lens histograms do not match the planes".into(),
        ));
    }
    let mut out = SimilarityMap::new(w, h, planes.len());
    let tile = tile.unwrap_or(usize::MAX).max(1);
    for ty0 in (0..h).step_by(tile) {
        for tx0 in (0..w).step_by(tile) {
            let core = (tx0, ty0, (tx0 + tile).min(w), (ty0 + tile).min(h));
            let bx0 = core.0.saturating_sub(half.0);
            let by0 = core.1.saturating_sub(half.1);
            let bx1 = (core.2 + half.0).min(w);
            let by1 = (core.3 + half.1).min(h);
            let integrals = planes
                .iter()
                .map(|p| {
                    if (bx0, by0, bx1, by1) == (0, 0, w, h) {
                        return IntegralHistogram::build(p);
                    }
                    IntegralHistogram::build(&QuantizedPlane {
                        bins: p.bins.crop(bx0, by0, bx1, by1),
                        bin_count: p.bin_count,
                        channel: p.channel.clone(),
                        range_lo: p.range_lo,
                        range_hi: p.range_hi,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let block = Block {
                integrals: &integrals,
                origin: (bx0, by0),
            };
            fill_map(&block, lens, half, (w, h), core, (0, 0), &mut out);
        }
    }
    Ok(out)
}
