//! Seeded synthetic datasets with known ground truth.
//!
//! Cells are non-overlapping disks carrying a Gaussian intensity profile per
//! channel on a noisy background. Planted patterns are square copies of one
//! seeded blocky texture; cells never overlap them, so every copy has the
//! same intensity distribution up to background noise.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::meta::{ChannelMeta, DatasetMeta, CELLS_FILE};
use super::plane::Plane;
use super::pyramid::PyramidWriter;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

const CHANNEL_NAMES: [&str; 8] = [
    "DAPI", "Keratin", "CD45", "CD3", "CD20", "PD-L1", "CD68", "Ki67",
];
pub const CELL_TYPES: [&str; 5] = ["Tumor", "T cell", "B cell", "Macrophage", "Stroma"];

const BACKGROUND_MEAN: f64 = 800.0;
const BACKGROUND_SD: f64 = 120.0;
const TEXTURE_BLOCK: usize = 8;

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub width: u64,
    pub height: u64,
    pub n_channels: usize,
    pub n_cells: usize,
    pub n_patterns: usize,
    pub tile_size: u32,
    pub pixel_size_um: f64,
    /// Inclusive range of cell radii in pixels.
    pub cell_radius: (f64, f64),
    /// Side of each planted texture square in pixels.
    pub pattern_size: u64,
}

impl SyntheticConfig {
    pub fn new(
        seed: u64,
        width: u64,
        height: u64,
        n_channels: usize,
        n_cells: usize,
        n_patterns: usize,
    ) -> Self {
        Self {
            seed,
            width,
            height,
            n_channels,
            n_cells,
            n_patterns,
            tile_size: super::meta::DEFAULT_TILE_SIZE,
            pixel_size_um: 0.325,
            cell_radius: (4.0, 8.0),
            pattern_size: 128,
        }
    }

    pub fn channel_names(&self) -> Vec<String> {
        (0..self.n_channels)
            .map(|i| match CHANNEL_NAMES.get(i) {
                Some(name) => (*name).to_string(),
                None => format!("Marker{i}"),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedPattern {
    pub x0: u64,
    pub y0: u64,
    pub size: u64,
    pub center_x: f64,
    pub center_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCell {
    pub id: u32,
    pub x: u64,
    pub y: u64,
    pub radius: f64,
    pub cell_type: String,
}

impl PlantedCell {
    pub fn covers(&self, x: u64, y: u64) -> bool {
        let dx = x as f64 - self.x as f64;
        let dy = y as f64 - self.y as f64;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub width: u64,
    pub height: u64,
    pub channels: Vec<String>,
    pub patterns: Vec<PlantedPattern>,
    pub cells: Vec<PlantedCell>,
}

impl GroundTruth {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dir: PathBuf,
    pub manifest_path: PathBuf,
    pub truth: GroundTruth,
}

fn place_patterns(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Result<Vec<PlantedPattern>> {
    let size = cfg.pattern_size;
    if cfg.n_patterns == 0 {
        return Ok(Vec::new());
    }
    let gap = size / 2;
    if size == 0 || size + 2 * gap > cfg.width || size + 2 * gap > cfg.height {
        return Err(Error::Infeasible(format!(
            "pattern of size {size} does not fit a {}x{} image",
            cfg.width, cfg.height
        )));
    }
    let mut placed: Vec<PlantedPattern> = Vec::with_capacity(cfg.n_patterns);
    let max_attempts = 1000 * cfg.n_patterns;
    let mut attempts = 0;
    while placed.len() < cfg.n_patterns {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Infeasible(format!(
                "could not place {} non-overlapping patterns",
                cfg.n_patterns
            )));
        }
        let x0 = rng.random_range(gap..=cfg.width - size - gap);
        let y0 = rng.random_range(gap..=cfg.height - size - gap);
        let clear = placed.iter().all(|p| {
            x0 + size + gap <= p.x0
                || p.x0 + size + gap <= x0
                || y0 + size + gap <= p.y0
                || p.y0 + size + gap <= y0
        });
        if clear {
            placed.push(PlantedPattern {
                x0,
                y0,
                size,
                center_x: x0 as f64 + size as f64 / 2.0,
                center_y: y0 as f64 + size as f64 / 2.0,
            });
        }
    }
    Ok(placed)
}

fn place_cells(
    cfg: &SyntheticConfig,
    patterns: &[PlantedPattern],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PlantedCell>> {
    let (rmin, rmax) = cfg.cell_radius;
    if cfg.n_cells == 0 {
        return Ok(Vec::new());
    }
    if !(rmin > 0.0 && rmin <= rmax) {
        return Err(Error::InvalidArgument(
            "cell radius range must satisfy 0 < min <= max".into(),
        ));
    }
    let margin = rmax.ceil() as u64 + 1;
    if 2 * margin >= cfg.width || 2 * margin >= cfg.height {
        return Err(Error::Infeasible(
            "image too small for the cell radius range".into(),
        ));
    }
    let pattern_area: f64 = patterns.iter().map(|p| (p.size * p.size) as f64).sum();
    let free_area = (cfg.width * cfg.height) as f64 - pattern_area;
    let mean_r = (rmin + rmax) / 2.0 + 1.0;
    let needed = cfg.n_cells as f64 * std::f64::consts::PI * mean_r * mean_r;
    if needed > 0.5 * free_area {
        return Err(Error::Infeasible(format!(
            "{} cells need ~{needed:.0} px² but only {free_area:.0} px² are free",
            cfg.n_cells
        )));
    }

    let bucket = (2.0 * rmax + 2.0).ceil() as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut cells: Vec<PlantedCell> = Vec::with_capacity(cfg.n_cells);
    let max_attempts = 200 * cfg.n_cells + 10_000;
    let mut attempts = 0;
    while cells.len() < cfg.n_cells {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Infeasible(format!(
                "placed only {} of {} cells without overlap",
                cells.len(),
                cfg.n_cells
            )));
        }
        let radius = if rmin == rmax {
            rmin
        } else {
            rng.random_range(rmin..=rmax)
        };
        let x = rng.random_range(margin..cfg.width - margin);
        let y = rng.random_range(margin..cfg.height - margin);
        let type_idx = rng.random_range(0..CELL_TYPES.len());

        let reach = radius.ceil() as u64 + 1;
        let hits_pattern = patterns.iter().any(|p| {
            x + reach >= p.x0
                && x <= p.x0 + p.size + reach
                && y + reach >= p.y0
                && y <= p.y0 + p.size + reach
        });
        if hits_pattern {
            continue;
        }
        let (gx, gy) = (x as i64 / bucket, y as i64 / bucket);
        let mut clear = true;
        'outer: for ny in gy - 1..=gy + 1 {
            for nx in gx - 1..=gx + 1 {
                if let Some(ids) = grid.get(&(nx, ny)) {
                    for &i in ids {
                        let c = &cells[i];
                        let dx = c.x as f64 - x as f64;
                        let dy = c.y as f64 - y as f64;
                        let min_d = c.radius + radius + 1.0;
                        if dx * dx + dy * dy <= min_d * min_d {
                            clear = false;
                            break 'outer;
                        }
                    }
                }
            }
        }
        if !clear {
            continue;
        }
        grid.entry((gx, gy)).or_default().push(cells.len());
        cells.push(PlantedCell {
            id: cells.len() as u32 + 1,
            x,
            y,
            radius,
            cell_type: CELL_TYPES[type_idx].to_string(),
        });
    }
    Ok(cells)
}

/// Pixels covered by a disk cell, clipped to the image.
fn disk_pixels(
    cell: &PlantedCell,
    width: u64,
    height: u64,
) -> impl Iterator<Item = (u64, u64)> + '_ {
    let r = cell.radius.ceil() as u64;
    let ys = cell.y.saturating_sub(r)..=(cell.y + r).min(height - 1);
    ys.flat_map(move |y| {
        let xs = cell.x.saturating_sub(r)..=(cell.x + r).min(width - 1);
        xs.map(move |x| (x, y))
    })
    .filter(move |&(x, y)| cell.covers(x, y))
}

fn texture(rng: &mut ChaCha8Rng, size: usize, channel: usize) -> Plane<u16> {
    let lo = 16_000 + 4_000 * (channel % 4) as u32;
    let hi = lo + 20_000;
    let blocks = size.div_ceil(TEXTURE_BLOCK);
    let values: Vec<u16> = (0..blocks * blocks)
        .map(|_| rng.random_range(lo..=hi) as u16)
        .collect();
    Plane::from_fn(size, size, |x, y| {
        values[(y / TEXTURE_BLOCK) * blocks + x / TEXTURE_BLOCK]
    })
}

/// Generates a dataset under `out_dir` and a ground-truth manifest next to
/// `meta.json`. Output is a pure function of `cfg`.
pub fn generate_synthetic(
    cfg: &SyntheticConfig,
    out_dir: impl AsRef<Path>,
) -> Result<SyntheticDataset> {
    let out_dir = out_dir.as_ref().to_path_buf();
    if cfg.width == 0 || cfg.height == 0 || cfg.n_channels == 0 {
        return Err(Error::InvalidArgument(
            "width, height and channel count must be positive".into(),
        ));
    }
    let names = cfg.channel_names();
    let meta = DatasetMeta::new(
        cfg.width,
        cfg.height,
        cfg.pixel_size_um,
        cfg.tile_size,
        names.iter().map(ChannelMeta::new).collect(),
        true,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let patterns = place_patterns(cfg, &mut rng)?;
    let cells = place_cells(cfg, &patterns, &mut rng)?;
    let channel_seeds: Vec<u64> = (0..cfg.n_channels).map(|_| rng.random()).collect();
    let amplitudes: Vec<Vec<f64>> = cells
        .iter()
        .map(|_| {
            (0..cfg.n_channels)
                .map(|_| rng.random_range(1_500.0..30_000.0))
                .collect()
        })
        .collect();
    let textures: Vec<Plane<u16>> = (0..cfg.n_channels)
        .map(|c| texture(&mut rng, cfg.pattern_size as usize, c))
        .collect();

    let (w, h) = (cfg.width as usize, cfg.height as usize);
    let mut writer = PyramidWriter::create(&out_dir, meta)?;

    let mut mask = Plane::<u32>::new(w, h);
    for cell in &cells {
        for (x, y) in disk_pixels(cell, cfg.width, cfg.height) {
            mask.set(x as usize, y as usize, cell.id);
        }
    }

    let mut sums = vec![vec![0u64; cfg.n_channels]; cells.len()];
    let mut counts = vec![0u64; cells.len()];
    for cell in &cells {
        counts[cell.id as usize - 1] = disk_pixels(cell, cfg.width, cfg.height).count() as u64;
    }

    let noise = Normal::new(BACKGROUND_MEAN, BACKGROUND_SD).expect("valid normal");
    for (c, name) in names.iter().enumerate() {
        let mut crng = ChaCha8Rng::seed_from_u64(channel_seeds[c]);
        let mut plane = Plane::<u16>::from_fn(w, h, |_, _| {
            noise.sample(&mut crng).clamp(0.0, 65_535.0) as u16
        });
        for p in &patterns {
            let tex = &textures[c];
            for ty in 0..p.size as usize {
                let row = plane.row_mut(p.y0 as usize + ty);
                for tx in 0..p.size as usize {
                    let px = &mut row[p.x0 as usize + tx];
                    let v = f64::from(tex.get(tx, ty)) + f64::from(*px) - BACKGROUND_MEAN;
                    *px = v.clamp(0.0, 65_535.0) as u16;
                }
            }
        }
        for (k, cell) in cells.iter().enumerate() {
            let sigma = cell.radius / 2.0;
            let amp = amplitudes[k][c];
            for (x, y) in disk_pixels(cell, cfg.width, cfg.height) {
                let dx = x as f64 - cell.x as f64;
                let dy = y as f64 - cell.y as f64;
                let add = amp * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
                let v = (f64::from(plane.get(x as usize, y as usize)) + add).clamp(0.0, 65_535.0)
                    as u16;
                plane.set(x as usize, y as usize, v);
                sums[k][c] += u64::from(v);
            }
        }
        writer.write_channel(name, plane)?;
    }
    writer.write_mask(mask)?;

    let cells_path = out_dir.join(CELLS_FILE);
    let mut csv = csv::Writer::from_path(&cells_path)?;
    let mut header = vec!["CellID".to_string(), "X".into(), "Y".into()];
    header.extend(names.iter().cloned());
    header.push("CellType".into());
    csv.write_record(&header)?;
    for (k, cell) in cells.iter().enumerate() {
        let mut row = vec![cell.id.to_string(), cell.x.to_string(), cell.y.to_string()];
        for c in 0..cfg.n_channels {
            row.push((sums[k][c] as f64 / counts[k] as f64).to_string());
        }
        row.push(cell.cell_type.clone());
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|e| Error::io(&cells_path, e))?;

    writer.finish()?;

    let truth = GroundTruth {
        seed: cfg.seed,
        width: cfg.width,
        height: cfg.height,
        channels: names,
        patterns,
        cells,
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&truth)?;
    std::fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(SyntheticDataset {
        dir: out_dir,
        manifest_path,
        truth,
    })
}
