use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ball_tree::BallTree;
use super::table::CellTable;
use crate::error::{Error, Result};
use crate::geometry::LensGeometry;

pub const HISTOGRAM_BINS: usize = 30;

/// Display-domain transform for marker values.
pub fn log_value(v: f64) -> f64 {
    (v + 1.0).log2()
}

/// Bin of a transformed value inside `[lo, hi]`; `hi` falls in the last bin.
pub fn bin_index(v: f64, lo: f64, hi: f64) -> usize {
    let t = (v - lo) / (hi - lo) * HISTOGRAM_BINS as f64;
    (t.floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

pub fn bin_edges(lo: f64, hi: f64) -> Vec<f64> {
    (0..=HISTOGRAM_BINS)
        .map(|i| {
            if i == HISTOGRAM_BINS {
                hi
            } else {
                lo + (hi - lo) * i as f64 / HISTOGRAM_BINS as f64
            }
        })
        .collect()
}

/// Ball-tree index over the centroids of a [`CellTable`].
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    tree: BallTree,
    ids: Vec<u32>,
}

impl SpatialIndex {
    pub fn build(table: &CellTable) -> Self {
        Self::build_with_leaf_size(table, super::ball_tree::DEFAULT_LEAF_SIZE)
    }

    pub fn build_with_leaf_size(table: &CellTable, leaf_size: usize) -> Self {
        let points = table.cells().iter().map(|c| [c.x, c.y]).collect();
        Self {
            tree: BallTree::with_leaf_size(points, leaf_size),
            ids: table.cells().iter().map(|c| c.cell_id).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn tree(&self) -> &BallTree {
        &self.tree
    }

    /// IDs of cells whose centroid lies in `geometry`, ascending.
    pub fn query_region(&self, geometry: &LensGeometry) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .tree
            .query(geometry)
            .into_iter()
            .map(|i| self.ids[i])
            .collect();
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelHistogram {
    pub channel: String,
    /// 31 edges in the `log2(v + 1)` domain.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub global_counts: Vec<u64>,
    /// In-region cells dropped by the global percentile cut.
    pub clipped: u64,
    pub global_clipped: u64,
    pub region_mean: Option<f64>,
    pub global_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMean {
    pub channel: String,
    /// `None` for an empty region.
    pub region_mean: Option<f64>,
    pub global_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCount {
    pub cell_type: String,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeOrder {
    /// Global first-seen order; every known type listed, zeros included.
    #[default]
    Locked,
    /// Descending count, ties alphabetical; zero counts omitted.
    ByCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub cell_ids: Vec<u32>,
    pub n_cells: u64,
    pub empty: bool,
    pub histograms: Vec<ChannelHistogram>,
    pub radial_means: Vec<RadialMean>,
    pub type_counts: Vec<TypeCount>,
    pub area_um2: f64,
}

fn channel_index(table: &CellTable, channel: &str) -> Result<usize> {
    table.channel_index(channel).ok_or_else(|| Error::Lookup {
        what: "channel",
        name: channel.to_string(),
    })
}

fn region_mean(table: &CellTable, cell_ids: &[u32], c: usize) -> Option<f64> {
    if cell_ids.is_empty() {
        return None;
    }
    let sum: f64 = cell_ids
        .iter()
        .filter_map(|id| table.get(*id))
        .map(|cell| cell.means[c])
        .sum();
    Some(sum / cell_ids.len() as f64)
}

pub fn region_histograms(
    table: &CellTable,
    cell_ids: &[u32],
    channels: &[String],
) -> Result<Vec<ChannelHistogram>> {
    channels
        .iter()
        .map(|name| {
            let c = channel_index(table, name)?;
            let summary = table.summary(c);
            let global = summary
                .histogram
                .as_ref()
                .ok_or_else(|| Error::DegenerateRange(name.clone()))?;
            let mut counts = vec![0u64; HISTOGRAM_BINS];
            let mut clipped = 0;
            for cell in cell_ids.iter().filter_map(|id| table.get(*id)) {
                let v = cell.means[c];
                if v < summary.p1 || v > summary.p99 {
                    clipped += 1;
                } else {
                    counts[bin_index(log_value(v), global.lo, global.hi)] += 1;
                }
            }
            Ok(ChannelHistogram {
                channel: name.clone(),
                bin_edges: bin_edges(global.lo, global.hi),
                counts,
                global_counts: global.counts.clone(),
                clipped,
                global_clipped: global.clipped,
                region_mean: region_mean(table, cell_ids, c),
                global_mean: summary.mean,
            })
        })
        .collect()
}

/// Region and whole-table means for every channel of the table.
pub fn radial_means(table: &CellTable, cell_ids: &[u32]) -> Vec<RadialMean> {
    table
        .channels()
        .iter()
        .enumerate()
        .map(|(c, name)| RadialMean {
            channel: name.clone(),
            region_mean: region_mean(table, cell_ids, c),
            global_mean: table.summary(c).mean,
        })
        .collect()
}

pub fn type_counts(table: &CellTable, cell_ids: &[u32], order: TypeOrder) -> Vec<TypeCount> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for cell in cell_ids.iter().filter_map(|id| table.get(*id)) {
        if let Some(t) = &cell.cell_type {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    match order {
        TypeOrder::Locked => table
            .type_order()
            .iter()
            .map(|t| TypeCount {
                cell_type: t.clone(),
                count: counts.get(t.as_str()).copied().unwrap_or(0),
            })
            .collect(),
        TypeOrder::ByCount => {
            let mut out: Vec<TypeCount> = counts
                .into_iter()
                .map(|(t, count)| TypeCount {
                    cell_type: t.to_string(),
                    count,
                })
                .collect();
            out.sort_by(|a, b| {
                b.count
                    .cmp(&a.count)
                    .then_with(|| a.cell_type.cmp(&b.cell_type))
            });
            out
        }
    }
}

/// Cells whose `log2(v + 1)` value for `channel` lies in `[lo, hi]`.
pub fn brush_filter(
    table: &CellTable,
    cell_ids: &[u32],
    channel: &str,
    lo: f64,
    hi: f64,
) -> Result<Vec<u32>> {
    if lo > hi {
        return Err(Error::InvalidArgument(format!(
            "brush range [{lo}, {hi}] is inverted"
        )));
    }
    let c = channel_index(table, channel)?;
    Ok(cell_ids
        .iter()
        .copied()
        .filter(|id| {
            table.get(*id).is_some_and(|cell| {
                let v = log_value(cell.means[c]);
                v >= lo && v <= hi
            })
        })
        .collect())
}

pub fn region_area_um2(geometry: &LensGeometry, pixel_size_um: f64) -> Result<f64> {
    if !(pixel_size_um > 0.0 && pixel_size_um.is_finite()) {
        return Err(Error::InvalidArgument(
            "pixel_size_um must be positive".into(),
        ));
    }
    Ok(geometry.area_px() * pixel_size_um * pixel_size_um)
}

/// Everything the lens shows for one region.
pub fn compute_region_stats(
    table: &CellTable,
    index: &SpatialIndex,
    geometry: &LensGeometry,
    channels: &[String],
    order: TypeOrder,
    pixel_size_um: f64,
) -> Result<RegionStats> {
    geometry.validate()?;
    let cell_ids = index.query_region(geometry);
    let histograms = region_histograms(table, &cell_ids, channels)?;
    Ok(RegionStats {
        n_cells: cell_ids.len() as u64,
        empty: cell_ids.is_empty(),
        histograms,
        radial_means: radial_means(table, &cell_ids),
        type_counts: type_counts(table, &cell_ids, order),
        area_um2: region_area_um2(geometry, pixel_size_um)?,
        cell_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell_features::CellRecord;

    fn table() -> CellTable {
        let types = ["B", "T", "B", "B", "M", "T"];
        let cells = (0..6)
            .map(|i| CellRecord {
                cell_id: i + 1,
                x: f64::from(i) * 10.0,
                y: 0.0,
                means: vec![f64::from(i * i), 3.0],
                cell_type: Some(types[i as usize].to_string()),
            })
            .collect();
        CellTable::from_cells(vec!["A".into(), "K".into()], cells).unwrap()
    }

    #[test]
    fn single_cell_fills_one_bin() {
        let t = table();
        let h = &region_histograms(&t, &[3], &["A".into()]).unwrap()[0];
        assert_eq!(h.counts.iter().sum::<u64>(), 1);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.bin_edges.len(), 31);
        assert!(h.bin_edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn constant_channel_is_degenerate() {
        let t = table();
        assert!(matches!(
            region_histograms(&t, &[1, 2], &["K".into()]),
            Err(Error::DegenerateRange(c)) if c == "K"
        ));
    }

    #[test]
    fn by_count_order() {
        let t = table();
        let all: Vec<u32> = (1..=6).collect();
        let got = type_counts(&t, &[1, 2, 3, 4], TypeOrder::ByCount);
        assert_eq!(
            got,
            vec![
                TypeCount {
                    cell_type: "B".into(),
                    count: 3
                },
                TypeCount {
                    cell_type: "T".into(),
                    count: 1
                }
            ]
        );
        let locked = type_counts(&t, &[5], TypeOrder::Locked);
        let labels: Vec<_> = locked.iter().map(|t| t.cell_type.as_str()).collect();
        assert_eq!(labels, ["B", "T", "M"]);
        let locked_all = type_counts(&t, &all, TypeOrder::Locked);
        assert_eq!(
            locked_all.iter().map(|t| t.count).collect::<Vec<_>>(),
            vec![3, 2, 1]
        );
    }

    #[test]
    fn ties_are_alphabetical() {
        let t = table();
        let got = type_counts(&t, &[2, 5], TypeOrder::ByCount);
        assert_eq!(got[0].cell_type, "M");
        assert_eq!(got[1].cell_type, "T");
    }

    #[test]
    fn empty_region_flags_means() {
        let t = table();
        let r = radial_means(&t, &[]);
        assert!(r.iter().all(|m| m.region_mean.is_none()));
    }

    #[test]
    fn brush_full_and_empty_ranges() {
        let t = table();
        let ids: Vec<u32> = (1..=6).collect();
        assert_eq!(
            brush_filter(&t, &ids, "A", f64::NEG_INFINITY, f64::INFINITY).unwrap(),
            ids
        );
        assert!(brush_filter(&t, &ids, "A", 0.5, 0.5).unwrap().is_empty());
        assert!(brush_filter(&t, &ids, "A", 2.0, 1.0).is_err());
    }

    #[test]
    fn areas() {
        let r = 1.0 / std::f64::consts::PI.sqrt();
        let a = region_area_um2(&LensGeometry::circle(0.0, 0.0, r), 1.0).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
        let a = region_area_um2(&LensGeometry::rect(0.0, 0.0, 50.0, 50.0), 0.5).unwrap();
        assert!((a - 2500.0).abs() < 1e-9);
        let a1 = region_area_um2(&LensGeometry::circle(0.0, 0.0, 7.0), 0.3).unwrap();
        let a2 = region_area_um2(&LensGeometry::circle(0.0, 0.0, 14.0), 0.3).unwrap();
        assert!((a2 / a1 - 4.0).abs() < 1e-12);
    }
}
