use super::color::{blend, composite, map_intensity, ChannelSet, Rgb, Rgba};
use super::lens::{lens_source_coord, LensMode, LensState};
use crate::error::{Error, Result};
use crate::geometry::{level0_to_level, level_for_zoom, level_to_level0};
use crate::image_store::{DatasetHandle, Plane, RegionRect};

/// A rendered lens patch positioned in viewport pixel coordinates. Pixels
/// outside the lens outline are fully transparent.
#[derive(Debug, Clone, PartialEq)]
pub struct LensPatch {
    pub x: i64,
    pub y: i64,
    pub width: usize,
    pub height: usize,
    /// Pyramid level the lens content was sampled from.
    pub source_level: u32,
    pub rgba: Plane<Rgba>,
}

impl LensPatch {
    pub fn rect(&self) -> (i64, i64, i64, i64) {
        (
            self.x,
            self.y,
            self.x + self.width as i64,
            self.y + self.height as i64,
        )
    }
}

pub fn read_channel_planes(
    handle: &DatasetHandle,
    set: &ChannelSet,
    region: &RegionRect,
) -> Result<Vec<Plane<u16>>> {
    set.settings
        .iter()
        .map(|s| handle.read_region(&s.channel, region))
        .collect()
}

/// Context render of a viewport region: one output pixel per level pixel.
pub fn render_context(
    handle: &DatasetHandle,
    viewport: &RegionRect,
    set: &ChannelSet,
) -> Result<Plane<Rgb>> {
    set.validate()?;
    let planes = read_channel_planes(handle, set, viewport)?;
    if planes.is_empty() {
        return Ok(Plane::new(
            viewport.width() as usize,
            viewport.height() as usize,
        ));
    }
    let refs: Vec<&Plane<u16>> = planes.iter().collect();
    composite(&refs, set)
}

fn mix(values: &[u16], set: &ChannelSet) -> Rgb {
    let mut acc = [0u16; 3];
    for (&v, s) in values.iter().zip(&set.settings) {
        let c = map_intensity(v, s);
        for k in 0..3 {
            acc[k] += u16::from(c[k]);
        }
    }
    acc.map(|v| v.min(255) as u8)
}

/// Viewport-relative bounding box of the lens, clipped to the viewport.
fn lens_bbox(viewport: &RegionRect, lens: &LensState) -> Option<(u64, u64, u64, u64)> {
    let g = lens.geometry.at_level(viewport.level);
    let (cx, cy) = g.center();
    let (hw, hh) = g.half_extents();
    let x0 = ((cx - hw).floor().max(viewport.x0 as f64)) as u64;
    let y0 = ((cy - hh).floor().max(viewport.y0 as f64)) as u64;
    let x1 = ((cx + hw).ceil() + 1.0).min(viewport.x1 as f64);
    let y1 = ((cy + hh).ceil() + 1.0).min(viewport.y1 as f64);
    if x1 <= x0 as f64 || y1 <= y0 as f64 {
        return None;
    }
    Some((
        x0 - viewport.x0,
        y0 - viewport.y0,
        x1 as u64 - viewport.x0,
        y1 as u64 - viewport.y0,
    ))
}

/// Renders the lens over a viewport. The lens content is sampled through the
/// magnifier mapping from the level matching `zoom * mag_factor` and blended
/// over the context colour with `blend_alpha`.
pub fn render_lens(
    handle: &DatasetHandle,
    viewport: &RegionRect,
    context_set: &ChannelSet,
    lens: &LensState,
) -> Result<LensPatch> {
    lens.validate()?;
    let meta = handle.meta();
    let (bx0, by0, bx1, by1) = lens_bbox(viewport, lens)
        .ok_or_else(|| Error::InvalidArgument("lens does not intersect the viewport".into()))?;
    let (pw, ph) = ((bx1 - bx0) as usize, (by1 - by0) as usize);
    let level = viewport.level;
    let bbox_region = RegionRect::new(
        level,
        viewport.x0 + bx0,
        viewport.y0 + by0,
        viewport.x0 + bx1,
        viewport.y0 + by1,
    );
    let context = render_context(handle, &bbox_region, context_set)?;

    let zoom = 0.5f64.powi(level as i32);
    let source_level = level_for_zoom(zoom * lens.effective_mag(), meta.levels);
    let (sw, sh) = meta.level_dims(source_level);

    // Source pixel for every display pixel inside the lens.
    let mut samples: Vec<Option<(u64, u64)>> = Vec::with_capacity(pw * ph);
    let (mut sx0, mut sy0, mut sx1, mut sy1) = (u64::MAX, u64::MAX, 0u64, 0u64);
    for j in 0..ph {
        for i in 0..pw {
            let qx = level_to_level0((bbox_region.x0 + i as u64) as f64, level);
            let qy = level_to_level0((bbox_region.y0 + j as u64) as f64, level);
            if !lens.geometry.contains(qx, qy) {
                samples.push(None);
                continue;
            }
            let (srcx, srcy) = lens_source_coord(
                (qx, qy),
                &lens.geometry,
                lens.magnifier,
                lens.mag_factor,
                lens.plateau_fraction,
            )?;
            let u = (level0_to_level(srcx, source_level) + 0.5)
                .floor()
                .clamp(0.0, (sw - 1) as f64) as u64;
            let v = (level0_to_level(srcy, source_level) + 0.5)
                .floor()
                .clamp(0.0, (sh - 1) as f64) as u64;
            sx0 = sx0.min(u);
            sy0 = sy0.min(v);
            sx1 = sx1.max(u + 1);
            sy1 = sy1.max(v + 1);
            samples.push(Some((u, v)));
        }
    }

    let mut rgba = Plane::<Rgba>::new(pw, ph);
    if sx0 < sx1 {
        let src_region = RegionRect::new(source_level, sx0, sy0, sx1, sy1);
        let planes = read_channel_planes(handle, &lens.lens_channel_set, &src_region)?;
        let mut values = vec![0u16; planes.len()];
        for j in 0..ph {
            for i in 0..pw {
                let Some((u, v)) = samples[j * pw + i] else {
                    continue;
                };
                for (k, p) in planes.iter().enumerate() {
                    values[k] = p.get((u - sx0) as usize, (v - sy0) as usize);
                }
                let lens_color = mix(&values, &lens.lens_channel_set);
                let [r, g, b] = blend(lens_color, context.get(i, j), lens.blend_alpha);
                rgba.set(i, j, [r, g, b, 255]);
            }
        }
    }
    Ok(LensPatch {
        x: bx0 as i64,
        y: by0 as i64,
        width: pw,
        height: ph,
        source_level,
        rgba,
    })
}

/// Patch A shows the lens channel set; patch B shows the same source region
/// with the context set and sits immediately to the right of A.
pub fn split_screen(
    handle: &DatasetHandle,
    viewport: &RegionRect,
    context_set: &ChannelSet,
    lens: &LensState,
) -> Result<(LensPatch, LensPatch)> {
    let a = render_lens(handle, viewport, context_set, lens)?;
    let mut twin = lens.clone();
    twin.lens_channel_set = context_set.clone();
    twin.blend_alpha = 1.0;
    let mut b = render_lens(handle, viewport, context_set, &twin)?;
    b.x = a.x + a.width as i64;
    b.y = a.y;
    Ok((a, b))
}

fn overlay(frame: &mut Plane<Rgba>, patch: &LensPatch) {
    for j in 0..patch.height {
        for i in 0..patch.width {
            let px = patch.rgba.get(i, j);
            if px[3] == 0 {
                continue;
            }
            let (x, y) = (patch.x + i as i64, patch.y + j as i64);
            if x >= 0 && y >= 0 && (x as usize) < frame.width() && (y as usize) < frame.height() {
                frame.set(x as usize, y as usize, px);
            }
        }
    }
}

/// Full frame: context composite with the optional lens (and, in split-screen
/// mode, its twin patch) drawn on top.
pub fn render_view(
    handle: &DatasetHandle,
    viewport: &RegionRect,
    context_set: &ChannelSet,
    lens: Option<&LensState>,
) -> Result<Plane<Rgba>> {
    let context = render_context(handle, viewport, context_set)?;
    let mut frame = super::color::to_rgba(&context);
    if let Some(lens) = lens {
        lens.validate()?;
        if lens_bbox(viewport, lens).is_none() {
            return Ok(frame);
        }
        if lens.mode == LensMode::SplitScreen {
            let (a, b) = split_screen(handle, viewport, context_set, lens)?;
            overlay(&mut frame, &a);
            overlay(&mut frame, &b);
        } else {
            let patch = render_lens(handle, viewport, context_set, lens)?;
            overlay(&mut frame, &patch);
        }
    }
    Ok(frame)
}
