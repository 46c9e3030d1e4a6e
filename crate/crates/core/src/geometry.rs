use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lens outline in level-0 pixel coordinates. Pixel `(i, j)` sits at the
/// point `(i, j)`; membership tests are closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum LensGeometry {
    Circle {
        cx: f64,
        cy: f64,
        radius: f64,
    },
    Rectangle {
        cx: f64,
        cy: f64,
        half_w: f64,
        half_h: f64,
    },
}

impl LensGeometry {
    pub fn circle(cx: f64, cy: f64, radius: f64) -> Self {
        LensGeometry::Circle { cx, cy, radius }
    }

    pub fn rect(cx: f64, cy: f64, half_w: f64, half_h: f64) -> Self {
        LensGeometry::Rectangle {
            cx,
            cy,
            half_w,
            half_h,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        match *self {
            LensGeometry::Circle { cx, cy, .. } | LensGeometry::Rectangle { cx, cy, .. } => {
                (cx, cy)
            }
        }
    }

    pub fn with_center(&self, cx: f64, cy: f64) -> Self {
        match *self {
            LensGeometry::Circle { radius, .. } => LensGeometry::Circle { cx, cy, radius },
            LensGeometry::Rectangle { half_w, half_h, .. } => LensGeometry::Rectangle {
                cx,
                cy,
                half_w,
                half_h,
            },
        }
    }

    /// Half extents of the axis-aligned bounding box.
    pub fn half_extents(&self) -> (f64, f64) {
        match *self {
            LensGeometry::Circle { radius, .. } => (radius, radius),
            LensGeometry::Rectangle { half_w, half_h, .. } => (half_w, half_h),
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            LensGeometry::Circle { cx, cy, radius } => {
                let (dx, dy) = (x - cx, y - cy);
                dx * dx + dy * dy <= radius * radius
            }
            LensGeometry::Rectangle {
                cx,
                cy,
                half_w,
                half_h,
            } => (x - cx).abs() <= half_w && (y - cy).abs() <= half_h,
        }
    }

    /// Area in square pixels.
    pub fn area_px(&self) -> f64 {
        match *self {
            LensGeometry::Circle { radius, .. } => std::f64::consts::PI * radius * radius,
            LensGeometry::Rectangle { half_w, half_h, .. } => 4.0 * half_w * half_h,
        }
    }

    /// Rejects non-finite coordinates and negative extents. Zero extents are
    /// allowed for queries (a zero radius selects exactly the centre point).
    pub fn validate(&self) -> Result<()> {
        let (cx, cy) = self.center();
        let (hw, hh) = self.half_extents();
        if ![cx, cy, hw, hh].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "lens geometry must be finite".into(),
            ));
        }
        if hw < 0.0 || hh < 0.0 {
            return Err(Error::InvalidArgument(
                "lens extent must not be negative".into(),
            ));
        }
        Ok(())
    }

    /// Same shape expressed in the pixel coordinates of pyramid `level`.
    pub fn at_level(&self, level: u32) -> Self {
        let s = f64::from(1u32 << level);
        let to = |v: f64| (v + 0.5) / s - 0.5;
        match *self {
            LensGeometry::Circle { cx, cy, radius } => LensGeometry::Circle {
                cx: to(cx),
                cy: to(cy),
                radius: radius / s,
            },
            LensGeometry::Rectangle {
                cx,
                cy,
                half_w,
                half_h,
            } => LensGeometry::Rectangle {
                cx: to(cx),
                cy: to(cy),
                half_w: half_w / s,
                half_h: half_h / s,
            },
        }
    }
}

/// Maps a pixel coordinate at `level` to level-0 coordinates (pixel centres
/// line up across levels).
pub fn level_to_level0(v: f64, level: u32) -> f64 {
    (v + 0.5) * f64::from(1u32 << level) - 0.5
}

pub fn level0_to_level(v: f64, level: u32) -> f64 {
    (v + 0.5) / f64::from(1u32 << level) - 0.5
}

/// Coarsest level whose scale `2^-level` is still at least `zoom`
/// (screen pixels per level-0 pixel).
pub fn level_for_zoom(zoom: f64, levels: u32) -> u32 {
    let mut level = 0;
    while level + 1 < levels && 0.5f64.powi(level as i32 + 1) >= zoom {
        level += 1;
    }
    level
}
