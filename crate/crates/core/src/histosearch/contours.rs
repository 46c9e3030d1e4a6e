//! Marching-squares iso-contours of a similarity map.
//!
//! The field is padded with a below-threshold border (invalid pixels count
//! as below too), so every contour closes. Segments run from the crossing
//! where a clockwise walk around the cell leaves the inside to the crossing
//! where it re-enters; neighbouring cells then chain end-to-start, outer
//! rings come out with positive shoelace area (y down) and holes negative.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::simmap::SimilarityMap;
use crate::error::{Error, Result};
use crate::geometry::level_to_level0;

const BELOW: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    /// Closed ring: the first vertex is repeated at the end.
    pub points: Vec<[f64; 2]>,
    /// Signed shoelace area in px²: positive for outer rings, negative for holes.
    pub area: f64,
}

impl Contour {
    pub fn is_hole(&self) -> bool {
        self.area < 0.0
    }

    pub fn perimeter(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }

    /// Even-odd point-in-ring test.
    pub fn winds_around(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for w in self.points.windows(2) {
            let ([x0, y0], [x1, y1]) = (w[0], w[1]);
            if (y0 > y) != (y1 > y) {
                let xc = x0 + (y - y0) / (y1 - y0) * (x1 - x0);
                if x < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Area centroid; the vertex mean for degenerate rings.
    pub fn centroid(&self) -> [f64; 2] {
        let (mut a, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for w in self.points.windows(2) {
            let cross = w[0][0] * w[1][1] - w[1][0] * w[0][1];
            a += cross;
            sx += (w[0][0] + w[1][0]) * cross;
            sy += (w[0][1] + w[1][1]) * cross;
        }
        if a.abs() > 1e-12 {
            return [sx / (3.0 * a), sy / (3.0 * a)];
        }
        let n = self.points.len().saturating_sub(1).max(1);
        let (sx, sy) = self.points[..n.min(self.points.len())]
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        [sx / n as f64, sy / n as f64]
    }
}

/// Contours at one threshold, in the pixel coordinates of the map they were
/// traced on, plus the transform back to level-0 pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub threshold: f64,
    /// Pyramid level of the map.
    pub level: u32,
    /// Map origin in that level's pixel coordinates.
    pub origin: [f64; 2],
    pub contours: Vec<Contour>,
}

impl ContourSet {
    pub fn to_level0(&self, p: [f64; 2]) -> [f64; 2] {
        [
            level_to_level0(p[0] + self.origin[0], self.level),
            level_to_level0(p[1] + self.origin[1], self.level),
        ]
    }

    /// Rings mapped to level-0 coordinates.
    pub fn level0_contours(&self) -> Vec<Contour> {
        let s = f64::from(1u32 << self.level);
        self.contours
            .iter()
            .map(|c| Contour {
                points: c.points.iter().map(|&p| self.to_level0(p)).collect(),
                area: c.area * s * s,
            })
            .collect()
    }

    /// Whether a level-0 point lies inside the above-threshold region
    /// (even-odd over all rings, so holes are respected).
    pub fn covers_level0(&self, x: f64, y: f64) -> bool {
        let s = f64::from(1u32 << self.level);
        let mx = (x + 0.5) / s - 0.5 - self.origin[0];
        let my = (y + 0.5) / s - 0.5 - self.origin[1];
        self.contours
            .iter()
            .filter(|c| c.winds_around(mx, my))
            .count()
            % 2
            == 1
    }

    pub fn outer_rings(&self) -> impl Iterator<Item = &Contour> {
        self.contours.iter().filter(|c| !c.is_hole())
    }

    /// Net enclosed area in map pixels².
    pub fn net_area(&self) -> f64 {
        self.contours.iter().map(|c| c.area).sum()
    }
}

/// Grid edge between two lattice points: horizontal from `(i, j)` to
/// `(i + 1, j)` or vertical from `(i, j)` to `(i, j + 1)`. Lattice
/// coordinates are offset by one for the padding ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(i64, i64),
    V(i64, i64),
}

pub fn extract_contours(map: &SimilarityMap, threshold: f64) -> Result<ContourSet> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    let (w, h) = (map.width() as i64, map.height() as i64);
    let value = |i: i64, j: i64| -> f64 {
        if i < 0 || j < 0 || i >= w || j >= h {
            return BELOW;
        }
        map.get(i as usize, j as usize).map_or(BELOW, f64::from)
    };
    let crossing = |a: (i64, i64), b: (i64, i64)| -> [f64; 2] {
        let (va, vb) = (value(a.0, a.1), value(b.0, b.1));
        let t = (threshold - va) / (vb - va);
        [
            a.0 as f64 + t * (b.0 - a.0) as f64,
            a.1 as f64 + t * (b.1 - a.1) as f64,
        ]
    };

    // segment start edge -> end edge
    let mut next: HashMap<Edge, Edge> = HashMap::new();
    let mut starts: Vec<Edge> = Vec::new();
    for j in -1..h {
        for i in -1..w {
            // clockwise corners: top-left, top-right, bottom-right, bottom-left
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let vals = corners.map(|(x, y)| value(x, y));
            let inside = vals.map(|v| v >= threshold);
            if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
                continue;
            }
            let edges = [
                Edge::H(i, j),
                Edge::V(i + 1, j),
                Edge::H(i, j + 1),
                Edge::V(i, j),
            ];
            let mut entries = Vec::with_capacity(2);
            let mut exits = Vec::with_capacity(2);
            for k in 0..4 {
                let (a, b) = (inside[k], inside[(k + 1) % 4]);
                if !a && b {
                    entries.push(k);
                } else if a && !b {
                    exits.push(k);
                }
            }
            let pairs: Vec<(usize, usize)> = if exits.len() == 1 {
                vec![(exits[0], entries[0])]
            } else {
                let centre = vals.iter().sum::<f64>() / 4.0;
                // walking clockwise, exits and entries alternate
                let next_entry =
                    |x: usize| *entries.iter().min_by_key(|&&e| (e + 4 - x) % 4).unwrap();
                let prev_entry =
                    |x: usize| *entries.iter().min_by_key(|&&e| (x + 4 - e) % 4).unwrap();
                if centre >= threshold {
                    exits.iter().map(|&x| (x, next_entry(x))).collect()
                } else {
                    exits.iter().map(|&x| (x, prev_entry(x))).collect()
                }
            };
            for (x, e) in pairs {
                next.insert(edges[x], edges[e]);
                starts.push(edges[x]);
            }
        }
    }

    let point_of = |e: Edge| match e {
        Edge::H(i, j) => crossing((i, j), (i + 1, j)),
        Edge::V(i, j) => crossing((i, j), (i, j + 1)),
    };
    let mut contours = Vec::new();
    for start in starts {
        if !next.contains_key(&start) {
            continue;
        }
        let mut ring = vec![point_of(start)];
        let mut cur = start;
        while let Some(e) = next.remove(&cur) {
            ring.push(point_of(e));
            cur = e;
            if cur == start {
                break;
            }
        }
        let area = ring
            .windows(2)
            .map(|p| p[0][0] * p[1][1] - p[1][0] * p[0][1])
            .sum::<f64>()
            / 2.0;
        contours.push(Contour { points: ring, area });
    }
    Ok(ContourSet {
        threshold,
        level: 0,
        origin: [0.0, 0.0],
        contours,
    })
}
