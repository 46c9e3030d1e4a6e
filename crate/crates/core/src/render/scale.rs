use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LensGeometry;

const MAX_INTERVALS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTick {
    /// Screen distance from the start of the axis.
    pub offset_px: f64,
    pub label_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleAxis {
    pub length_px: f64,
    pub length_um: f64,
    pub step_um: f64,
    pub ticks: Vec<ScaleTick>,
}

/// Microns spanned by `screen_px` screen pixels at `zoom` screen pixels per
/// level-0 pixel.
pub fn screen_to_microns(screen_px: f64, zoom: f64, pixel_size_um: f64) -> f64 {
    screen_px / zoom * pixel_size_um
}

/// Smallest step from the 1-2-5 series that is at least `min_step`.
pub fn nice_step(min_step: f64) -> f64 {
    let mut decade = 10f64.powf(min_step.log10().floor());
    loop {
        for m in [1.0, 2.0, 5.0] {
            if m * decade >= min_step {
                return m * decade;
            }
        }
        decade *= 10.0;
    }
}

/// Ticks along the lens's horizontal extent (diameter for circles).
pub fn lens_scale_ticks(
    geometry: &LensGeometry,
    pixel_size_um: f64,
    zoom: f64,
) -> Result<ScaleAxis> {
    if !(pixel_size_um > 0.0 && pixel_size_um.is_finite()) {
        return Err(Error::InvalidArgument(
            "pixel_size_um must be positive".into(),
        ));
    }
    if !(zoom > 0.0 && zoom.is_finite()) {
        return Err(Error::InvalidArgument("zoom must be positive".into()));
    }
    let (hw, _) = geometry.half_extents();
    if !(hw > 0.0) {
        return Err(Error::InvalidArgument(
            "lens extent must be positive".into(),
        ));
    }
    let length_px = 2.0 * hw * zoom;
    let length_um = screen_to_microns(length_px, zoom, pixel_size_um);
    let step_um = nice_step(length_um / MAX_INTERVALS);
    let n = (length_um / step_um + 1e-9).floor() as usize;
    let ticks = (0..=n)
        .map(|i| {
            let label_um = i as f64 * step_um;
            ScaleTick {
                offset_px: label_um / pixel_size_um * zoom,
                label_um,
            }
        })
        .collect();
    Ok(ScaleAxis {
        length_px,
        length_um,
        step_um,
        ticks,
    })
}
