use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_store::Plane;

pub type Rgb = [u8; 3];
pub type Rgba = [u8; 4];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelRenderSetting {
    pub channel: String,
    pub color: Rgb,
    pub range_lo: u16,
    pub range_hi: u16,
}

impl ChannelRenderSetting {
    pub fn new(channel: impl Into<String>, color: Rgb, range_lo: u16, range_hi: u16) -> Self {
        Self {
            channel: channel.into(),
            color,
            range_lo,
            range_hi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.range_lo >= self.range_hi {
            return Err(Error::InvalidArgument(format!(
                "channel `{}`: range_lo ({}) must be below range_hi ({})",
                self.channel, self.range_lo, self.range_hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub label: String,
    pub settings: Vec<ChannelRenderSetting>,
}

impl ChannelSet {
    pub fn new(label: impl Into<String>, settings: Vec<ChannelRenderSetting>) -> Self {
        Self {
            label: label.into(),
            settings,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.settings {
            s.validate()?;
            if !seen.insert(s.channel.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "channel `{}` appears twice in set `{}`",
                    s.channel, self.label
                )));
            }
        }
        Ok(())
    }

    pub fn channels(&self) -> impl Iterator<Item = &str> {
        self.settings.iter().map(|s| s.channel.as_str())
    }
}

/// Linear ramp from black at `range_lo` to the channel colour at `range_hi`,
/// each component rounded half-up. Evaluated in integers so it is exact.
pub fn map_intensity(v: u16, s: &ChannelRenderSetting) -> Rgb {
    if v <= s.range_lo {
        return [0, 0, 0];
    }
    if v >= s.range_hi {
        return s.color;
    }
    let num = u64::from(v - s.range_lo);
    let den = u64::from(s.range_hi - s.range_lo);
    s.color
        .map(|c| ((2 * num * u64::from(c) + den) / (2 * den)) as u8)
}

/// Additive blend of every channel's mapped colour, clamped to 255.
pub fn composite(planes: &[&Plane<u16>], set: &ChannelSet) -> Result<Plane<Rgb>> {
    if planes.len() != set.settings.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} planes for {} channel settings",
            planes.len(),
            set.settings.len()
        )));
    }
    let dims = planes.first().map(|p| p.dims()).unwrap_or((0, 0));
    if let Some(p) = planes.iter().find(|p| p.dims() != dims) {
        return Err(Error::DimensionMismatch(format!(
            "plane is {}x{}, expected {}x{}",
            p.width(),
            p.height(),
            dims.0,
            dims.1
        )));
    }
    let (w, h) = dims;
    let mut out = Plane::<Rgb>::new(w, h);
    out.as_mut_slice()
        .par_chunks_mut(w.max(1))
        .enumerate()
        .for_each(|(y, row)| {
            for (x, px) in row.iter_mut().enumerate() {
                let mut acc = [0u16; 3];
                for (plane, s) in planes.iter().zip(&set.settings) {
                    let c = map_intensity(plane.get(x, y), s);
                    for k in 0..3 {
                        acc[k] += u16::from(c[k]);
                    }
                }
                *px = acc.map(|v| v.min(255) as u8);
            }
        });
    Ok(out)
}

pub fn to_rgba(rgb: &Plane<Rgb>) -> Plane<Rgba> {
    Plane::from_vec(
        rgb.width(),
        rgb.height(),
        rgb.as_slice()
            .iter()
            .map(|&[r, g, b]| [r, g, b, 255])
            .collect(),
    )
    .expect("same dims")
}

/// `alpha * top + (1 - alpha) * bottom`, rounded half-up per component.
pub fn blend(top: Rgb, bottom: Rgb, alpha: f64) -> Rgb {
    let mut out = [0u8; 3];
    for k in 0..3 {
        let v = alpha * f64::from(top[k]) + (1.0 - alpha) * f64::from(bottom[k]);
        out[k] = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
    }
    out
}
