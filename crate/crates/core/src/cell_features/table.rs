use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::{bin_index, log_value, HISTOGRAM_BINS};
use crate::error::{Error, Result};
use crate::image_store::DatasetMeta;

pub const TYPE_COLUMN: &str = "CellType";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell_id: u32,
    pub x: f64,
    pub y: f64,
    /// Per-channel mean intensity, in table channel order.
    pub means: Vec<f64>,
    pub cell_type: Option<String>,
}

/// Whole-table reference values for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSummary {
    pub mean: f64,
    /// Nearest-rank 1st and 99th percentiles of the raw values.
    pub p1: f64,
    pub p99: f64,
    /// `None` when the channel has fewer than two distinct values or the
    /// percentile window collapses.
    pub histogram: Option<GlobalHistogram>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalHistogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub clipped: u64,
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `ceil(p/100 * n)`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Immutable single-cell feature table.
#[derive(Debug, Clone)]
pub struct CellTable {
    channels: Vec<String>,
    cells: Vec<CellRecord>,
    by_id: HashMap<u32, usize>,
    summaries: Vec<ChannelSummary>,
    type_order: Vec<String>,
}

impl CellTable {
    pub fn load(path: &Path, meta: &DatasetMeta) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(f, meta)
    }

    pub fn from_reader(reader: impl Read, meta: &DatasetMeta) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers.iter().position(|h| h == name).ok_or_else(|| {
                Error::schema(
                    format!("cells.csv:{name}"),
                    format!("missing column `{name}`"),
                )
            })
        };
        let id_col = col("CellID")?;
        let x_col = col("X")?;
        let y_col = col("Y")?;
        let channels: Vec<String> = meta.channels.iter().map(|c| c.name.clone()).collect();
        let channel_cols = channels
            .iter()
            .map(|c| col(c))
            .collect::<Result<Vec<_>>>()?;
        let type_col = headers.iter().position(|h| h == TYPE_COLUMN);

        let mut cells = Vec::new();
        let mut by_id = HashMap::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let line = i + 2;
            let field = |c: usize, name: &str| -> Result<f64> {
                let raw = record.get(c).unwrap_or("").trim();
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::schema(
                            format!("cells.csv:line {line}:{name}"),
                            format!("`{raw}` is not a number"),
                        )
                    })
            };
            let raw_id = record.get(id_col).unwrap_or("").trim();
            let cell_id: u32 = raw_id.parse().ok().filter(|&id| id > 0).ok_or_else(|| {
                Error::schema(
                    format!("cells.csv:line {line}:CellID"),
                    format!("`{raw_id}` is not a positive cell ID"),
                )
            })?;
            let x = field(x_col, "X")?;
            let y = field(y_col, "Y")?;
            if !(0.0..=meta.width_px as f64).contains(&x)
                || !(0.0..=meta.height_px as f64).contains(&y)
            {
                return Err(Error::Integrity(format!(
                    "cell {cell_id} at ({x}, {y}) lies outside the {}x{} image",
                    meta.width_px, meta.height_px
                )));
            }
            let mut means = Vec::with_capacity(channels.len());
            for (c, name) in channel_cols.iter().zip(&channels) {
                let v = field(*c, name)?;
                if v < 0.0 {
                    return Err(Error::Integrity(format!(
                        "cell {cell_id} has negative `{name}` value {v}"
                    )));
                }
                means.push(v);
            }
            let cell_type = type_col
                .and_then(|c| record.get(c))
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string);
            if by_id.insert(cell_id, cells.len()).is_some() {
                return Err(Error::Integrity(format!("duplicate cell ID {cell_id}")));
            }
            cells.push(CellRecord {
                cell_id,
                x,
                y,
                means,
                cell_type,
            });
        }
        Ok(Self::from_records(channels, cells, by_id))
    }

    /// Builds a table from already-validated records.
    pub fn from_cells(channels: Vec<String>, cells: Vec<CellRecord>) -> Result<Self> {
        let mut by_id = HashMap::new();
        for (i, c) in cells.iter().enumerate() {
            if c.means.len() != channels.len() {
                return Err(Error::DimensionMismatch(format!(
                    "cell {} has {} values for {} channels",
                    c.cell_id,
                    c.means.len(),
                    channels.len()
                )));
            }
            if by_id.insert(c.cell_id, i).is_some() {
                return Err(Error::Integrity(format!("duplicate cell ID {}", c.cell_id)));
            }
        }
        Ok(Self::from_records(channels, cells, by_id))
    }

    fn from_records(
        channels: Vec<String>,
        cells: Vec<CellRecord>,
        by_id: HashMap<u32, usize>,
    ) -> Self {
        let summaries = (0..channels.len()).map(|c| summarize(&cells, c)).collect();
        let mut type_order: Vec<String> = Vec::new();
        for cell in &cells {
            if let Some(t) = &cell.cell_type {
                if !type_order.contains(t) {
                    type_order.push(t.clone());
                }
            }
        }
        Self {
            channels,
            cells,
            by_id,
            summaries,
            type_order,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[CellRecord] {
        &self.cells
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    pub fn get(&self, cell_id: u32) -> Option<&CellRecord> {
        self.by_id.get(&cell_id).map(|&i| &self.cells[i])
    }

    pub fn summary(&self, channel: usize) -> &ChannelSummary {
        &self.summaries[channel]
    }

    /// Cell types in first-seen table order.
    pub fn type_order(&self) -> &[String] {
        &self.type_order
    }

    pub fn cell_types(&self) -> HashMap<u32, String> {
        self.cells
            .iter()
            .filter_map(|c| c.cell_type.clone().map(|t| (c.cell_id, t)))
            .collect()
    }
}

fn summarize(cells: &[CellRecord], channel: usize) -> ChannelSummary {
    if cells.is_empty() {
        return ChannelSummary {
            mean: 0.0,
            p1: 0.0,
            p99: 0.0,
            histogram: None,
        };
    }
    let mut values: Vec<f64> = cells.iter().map(|c| c.means[channel]).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(f64::total_cmp);
    let p1 = nearest_rank(&values, 1.0);
    let p99 = nearest_rank(&values, 99.0);
    let distinct = values.first() != values.last();
    let (lo, hi) = (log_value(p1), log_value(p99));
    let histogram = (distinct && hi > lo).then(|| {
        let mut counts = vec![0u64; HISTOGRAM_BINS];
        let mut clipped = 0;
        for cell in cells {
            let v = cell.means[channel];
            if v < p1 || v > p99 {
                clipped += 1;
            } else {
                counts[bin_index(log_value(v), lo, hi)] += 1;
            }
        }
        GlobalHistogram {
            lo,
            hi,
            counts,
            clipped,
        }
    });
    ChannelSummary {
        mean,
        p1,
        p99,
        histogram,
    }
}
