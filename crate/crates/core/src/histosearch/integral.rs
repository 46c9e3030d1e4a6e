use crate::error::{Error, Result};
use crate::image_store::Plane;
use crate::render::ChannelRenderSetting;

pub const DEFAULT_BINS: usize = 32;

/// Per-pixel greyscale bin indices for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPlane {
    pub bins: Plane<u8>,
    pub bin_count: usize,
    pub channel: String,
    pub range_lo: u16,
    pub range_hi: u16,
}

impl QuantizedPlane {
    pub fn width(&self) -> usize {
        self.bins.width()
    }

    pub fn height(&self) -> usize {
        self.bins.height()
    }
}

/// Bin of `v` after normalising by the render range: values at or below
/// `lo` land in bin 0, values at or above `hi` in the last bin.
#[inline]
pub fn quantize_value(v: u16, lo: u16, hi: u16, bins: usize) -> u8 {
    if v <= lo {
        return 0;
    }
    if v >= hi {
        return (bins - 1) as u8;
    }
    let b = (u64::from(v - lo) * bins as u64) / u64::from(hi - lo);
    (b as usize).min(bins - 1) as u8
}

pub fn quantize(
    plane: &Plane<u16>,
    setting: &ChannelRenderSetting,
    bins: usize,
) -> Result<QuantizedPlane> {
    if !(2..=256).contains(&bins) {
        return Err(Error::InvalidArgument(format!(
            "bin count {bins} outside 2..=256"
        )));
    }
    setting.validate()?;
    let (lo, hi) = (setting.range_lo, setting.range_hi);
    let data = plane
        .as_slice()
        .iter()
        .map(|&v| quantize_value(v, lo, hi, bins))
        .collect();
    Ok(QuantizedPlane {
        bins: Plane::from_vec(plane.width(), plane.height(), data)?,
        bin_count: bins,
        channel: setting.channel.clone(),
        range_lo: lo,
        range_hi: hi,
    })
}

/// Bin counts of one region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn zeros(bins: usize) -> Self {
        Self {
            counts: vec![0; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Unit-mass version; all zeros for an empty histogram.
    pub fn normalized(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let n = total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Cumulative per-bin counts: entry `(x, y, b)` counts bin-`b` pixels in
/// `[0, x) × [0, y)`.
#[derive(Debug, Clone)]
pub struct IntegralHistogram {
    width: usize,
    height: usize,
    bins: usize,
    data: Vec<u32>,
}

impl IntegralHistogram {
    pub fn build(q: &QuantizedPlane) -> Result<Self> {
        let (w, h) = (q.width(), q.height());
        if w == 0 || h == 0 {
            return Err(Error::InvalidArgument(
                "cannot build an integral histogram of an empty plane".into(),
            ));
        }
        if w.checked_mul(h).is_none_or(|n| n > u32::MAX as usize) {
            return Err(Error::InvalidArgument(
                "plane too large for 32-bit integral counts".into(),
            ));
        }
        let bins = q.bin_count;
        let stride = (w + 1) * bins;
        let mut data = vec![0u32; (h + 1) * stride];
        let mut row_prefix = vec![0u32; bins];
        for y in 1..=h {
            row_prefix.fill(0);
            let src = q.bins.row(y - 1);
            let (above, rest) = data.split_at_mut(y * stride);
            let above = &above[(y - 1) * stride..];
            let current = &mut rest[..stride];
            for x in 1..=w {
                row_prefix[src[x - 1] as usize] += 1;
                let base = x * bins;
                for b in 0..bins {
                    current[base + b] = above[base + b] + row_prefix[b];
                }
            }
        }
        Ok(Self {
            width: w,
            height: h,
            bins,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    #[inline]
    pub fn corner(&self, x: usize, y: usize) -> &[u32] {
        let i = (y * (self.width + 1) + x) * self.bins;
        &self.data[i..i + self.bins]
    }

    /// Four-corner extraction into `out` without bounds checks beyond
    /// slice indexing; `x0 <= x1 <= width`, `y0 <= y1 <= height`.
    #[inline]
    pub fn window_into(&self, x0: usize, y0: usize, x1: usize, y1: usize, out: &mut [u32]) {
        let a = self.corner(x1, y1);
        let b = self.corner(x1, y0);
        let c = self.corner(x0, y1);
        let d = self.corner(x0, y0);
        for k in 0..self.bins {
            out[k] = a[k]
                .wrapping_sub(b[k])
                .wrapping_sub(c[k])
                .wrapping_add(d[k]);
        }
    }

    /// Histogram of the half-open rectangle `[x0, x1) × [y0, y1)`.
    pub fn window_histogram(
        &self,
        x0: usize,
        y0: usize,
        x1: usize,
        y1: usize,
    ) -> Result<Histogram> {
        if !(x0 <= x1 && x1 <= self.width && y0 <= y1 && y1 <= self.height) {
            return Err(Error::Bounds {
                region: format!("[{x0}, {x1}) x [{y0}, {y1})"),
                level: 0,
                width: self.width as u64,
                height: self.height as u64,
            });
        }
        let mut out = vec![0u32; self.bins];
        self.window_into(x0, y0, x1, y1, &mut out);
        Ok(Histogram {
            counts: out.into_iter().map(u64::from).collect(),
        })
    }
}

/// Exact histogram over plane pixels inside `geometry` (plane coordinates).
pub fn lens_histogram(q: &QuantizedPlane, geometry: &crate::geometry::LensGeometry) -> Histogram {
    let mut hist = Histogram::zeros(q.bin_count);
    let (cx, cy) = geometry.center();
    let (hw, hh) = geometry.half_extents();
    let x0 = (cx - hw).floor().max(0.0) as usize;
    let y0 = (cy - hh).floor().max(0.0) as usize;
    let x1 = ((cx + hw).ceil() + 1.0).clamp(0.0, q.width() as f64) as usize;
    let y1 = ((cy + hh).ceil() + 1.0).clamp(0.0, q.height() as f64) as usize;
    for y in y0..y1 {
        let row = q.bins.row(y);
        for x in x0..x1 {
            if geometry.contains(x as f64, y as f64) {
                hist.counts[row[x] as usize] += 1;
            }
        }
    }
    hist
}

/// Chi-square distance between two unit-mass histograms, skipping empty
/// bin pairs.
pub fn chi_square_normalized(x: &[f64], y: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let s = a + b;
        if s > 0.0 {
            let diff = a - b;
            d += diff * diff / s;
        }
    }
    d
}

/// Chi-square distance after normalising both histograms to unit mass.
pub fn chi_square(x: &Histogram, y: &Histogram) -> Result<f64> {
    if x.bins() != y.bins() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} bins",
            x.bins(),
            y.bins()
        )));
    }
    Ok(chi_square_normalized(&x.normalized(), &y.normalized()))
}
