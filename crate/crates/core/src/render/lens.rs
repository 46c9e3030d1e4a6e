use serde::{Deserialize, Serialize};

use super::color::ChannelSet;
use crate::error::{Error, Result};
use crate::geometry::LensGeometry;

pub const DEFAULT_PLATEAU_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LensMode {
    Magnify,
    SingleChannel,
    MultiChannel,
    SplitScreen,
    Histogram,
    Radial,
    CellType,
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnifier {
    None,
    Normal,
    Fisheye,
    Plateau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensState {
    pub geometry: LensGeometry,
    pub mode: LensMode,
    pub magnifier: Magnifier,
    pub mag_factor: f64,
    #[serde(default = "default_plateau_fraction")]
    pub plateau_fraction: f64,
    pub lens_channel_set: ChannelSet,
    pub blend_alpha: f64,
}

fn default_plateau_fraction() -> f64 {
    DEFAULT_PLATEAU_FRACTION
}

impl LensState {
    pub fn new(geometry: LensGeometry, lens_channel_set: ChannelSet) -> Self {
        Self {
            geometry,
            mode: LensMode::MultiChannel,
            magnifier: Magnifier::None,
            mag_factor: 1.0,
            plateau_fraction: DEFAULT_PLATEAU_FRACTION,
            lens_channel_set,
            blend_alpha: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let (hw, hh) = self.geometry.half_extents();
        if hw <= 0.0 || hh <= 0.0 {
            return Err(Error::InvalidArgument(
                "lens extent must be positive".into(),
            ));
        }
        if !(self.mag_factor.is_finite() && self.mag_factor >= 1.0) {
            return Err(Error::InvalidArgument("mag_factor must be >= 1".into()));
        }
        if !(self.plateau_fraction > 0.0 && self.plateau_fraction <= 1.0) {
            return Err(Error::InvalidArgument(
                "plateau_fraction must lie in (0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.blend_alpha) {
            return Err(Error::InvalidArgument(
                "blend_alpha must lie in [0, 1]".into(),
            ));
        }
        if matches!(self.geometry, LensGeometry::Rectangle { .. })
            && self.magnifier != Magnifier::None
        {
            return Err(Error::Capability(
                "rectangular lenses only support magnifier `none`".into(),
            ));
        }
        self.lens_channel_set.validate()
    }

    /// Magnification actually applied at the lens centre.
    pub fn effective_mag(&self) -> f64 {
        match self.magnifier {
            Magnifier::None => 1.0,
            _ => self.mag_factor,
        }
    }
}

/// Source-space distance from the lens centre for a display point at
/// normalised radius `rho` in `[0, 1]`.
///
/// * normal: `rho R / m` (occludes: the rim shows `R / m`)
/// * fisheye: `rho R / (m - (m - 1) rho)`
/// * plateau: `rho R / m` inside `f`, then a straight line from `f R / m`
///   at `rho = f` up to `R` at the rim
pub fn source_radius(rho: f64, radius: f64, magnifier: Magnifier, m: f64, f: f64) -> f64 {
    match magnifier {
        Magnifier::None => rho * radius,
        Magnifier::Normal => rho * radius / m,
        Magnifier::Fisheye => rho * radius / (m - (m - 1.0) * rho),
        Magnifier::Plateau => {
            if rho <= f {
                rho * radius / m
            } else {
                let inner = f * radius / m;
                inner + (radius - inner) * (rho - f) / (1.0 - f)
            }
        }
    }
}

/// Maps a display point inside a lens to the source point it shows.
pub fn lens_source_coord(
    p: (f64, f64),
    geometry: &LensGeometry,
    magnifier: Magnifier,
    m: f64,
    f: f64,
) -> Result<(f64, f64)> {
    if !geometry.contains(p.0, p.1) {
        return Err(Error::Domain { x: p.0, y: p.1 });
    }
    if !(m >= 1.0) {
        return Err(Error::InvalidArgument("mag_factor must be >= 1".into()));
    }
    let radius = match *geometry {
        LensGeometry::Circle { radius, .. } => radius,
        LensGeometry::Rectangle { .. } => {
            if magnifier != Magnifier::None {
                return Err(Error::Capability(
                    "rectangular lenses only support magnifier `none`".into(),
                ));
            }
            return Ok(p);
        }
    };
    let (cx, cy) = geometry.center();
    let (dx, dy) = (p.0 - cx, p.1 - cy);
    let dist = (dx * dx + dy * dy).sqrt();
    if dist == 0.0 || radius == 0.0 {
        return Ok((cx, cy));
    }
    let rho = (dist / radius).min(1.0);
    let scale = source_radius(rho, radius, magnifier, m, f) / dist;
    if scale == 1.0 {
        return Ok(p);
    }
    Ok((cx + dx * scale, cy + dy * scale))
}
