use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use tiff::decoder::{Decoder, DecodingResult, Limits};
use tiff::encoder::{colortype, TiffEncoder};

use super::meta::{ChannelMeta, DatasetMeta, CELLS_FILE};
use super::plane::{Plane, RegionRect};
use super::pyramid::PyramidWriter;
use super::store::DatasetHandle;
use crate::error::{Error, Result};

pub const MASK_TIFF: &str = "mask.tif";

#[derive(Debug, Clone)]
pub struct IngestRequest {
    /// One single-plane 16-bit TIFF per channel; the file stem names the channel.
    pub planes: Vec<PathBuf>,
    /// Optional 32-bit label TIFF.
    pub mask: Option<PathBuf>,
    pub csv: PathBuf,
    pub out_dir: PathBuf,
    pub tile_size: u32,
    pub pixel_size_um: f64,
}

fn open_tiff(path: &Path) -> Result<Decoder<BufReader<File>>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(Decoder::new(BufReader::new(f))?.with_limits(Limits::unlimited()))
}

pub fn read_tiff_u16(path: &Path) -> Result<Plane<u16>> {
    let mut dec = open_tiff(path)?;
    let (w, h) = dec.dimensions()?;
    match dec.read_image()? {
        DecodingResult::U16(data) => Plane::from_vec(w as usize, h as usize, data),
        DecodingResult::U8(data) => Plane::from_vec(
            w as usize,
            h as usize,
            data.into_iter().map(u16::from).collect(),
        ),
        _ => Err(Error::InvalidArgument(format!(
            "{} is not an 8- or 16-bit greyscale TIFF",
            path.display()
        ))),
    }
}

pub fn read_tiff_u32(path: &Path) -> Result<Plane<u32>> {
    let mut dec = open_tiff(path)?;
    let (w, h) = dec.dimensions()?;
    let data: Vec<u32> = match dec.read_image()? {
        DecodingResult::U32(data) => data,
        DecodingResult::U16(data) => data.into_iter().map(u32::from).collect(),
        DecodingResult::U8(data) => data.into_iter().map(u32::from).collect(),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{} is not an unsigned integer label TIFF",
                path.display()
            )))
        }
    };
    Plane::from_vec(w as usize, h as usize, data)
}

pub fn write_tiff_u16(path: &Path, plane: &Plane<u16>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = TiffEncoder::new(f)?;
    enc.write_image::<colortype::Gray16>(
        plane.width() as u32,
        plane.height() as u32,
        plane.as_slice(),
    )?;
    Ok(())
}

pub fn write_tiff_u32(path: &Path, plane: &Plane<u32>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = TiffEncoder::new(f)?;
    enc.write_image::<colortype::Gray32>(
        plane.width() as u32,
        plane.height() as u32,
        plane.as_slice(),
    )?;
    Ok(())
}

fn channel_name(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "cannot derive a channel name from {}",
                path.display()
            ))
        })
}

/// Checks the CSV header and returns the set of cell IDs it lists.
fn csv_cell_ids(csv_path: &Path, channels: &[String]) -> Result<BTreeSet<u32>> {
    let mut reader = csv::Reader::from_path(csv_path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut required = vec!["CellID", "X", "Y"];
    required.extend(channels.iter().map(String::as_str));
    for name in &required {
        if col(name).is_none() {
            return Err(Error::schema(
                format!("{}:{name}", csv_path.display()),
                format!("missing column `{name}`"),
            ));
        }
    }
    let id_col = col("CellID").unwrap();
    let mut ids = BTreeSet::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let raw = record.get(id_col).unwrap_or("");
        let id: u32 = raw.trim().parse().map_err(|_| {
            Error::schema(
                format!("{}:row {}:CellID", csv_path.display(), row + 2),
                format!("`{raw}` is not a cell ID"),
            )
        })?;
        ids.insert(id);
    }
    Ok(ids)
}

/// Converts flat planes + a cell table into the chunked dataset format.
pub fn ingest(req: &IngestRequest) -> Result<PathBuf> {
    if req.planes.is_empty() {
        return Err(Error::InvalidArgument("no channel planes given".into()));
    }
    let names = req
        .planes
        .iter()
        .map(|p| channel_name(p))
        .collect::<Result<Vec<_>>>()?;

    // Dimensions are read from the headers first so a mismatch fails before
    // anything is written.
    let mut dims = Vec::new();
    for p in req.planes.iter().chain(req.mask.iter()) {
        let mut dec = open_tiff(p)?;
        dims.push((p, dec.dimensions()?));
    }
    let (_, (w, h)) = dims[0];
    if let Some((p, (pw, ph))) = dims.iter().find(|(_, d)| *d != (w, h)) {
        return Err(Error::DimensionMismatch(format!(
            "{} is {pw}x{ph} but {} is {w}x{h}",
            p.display(),
            req.planes[0].display()
        )));
    }

    let csv_ids = csv_cell_ids(&req.csv, &names)?;
    let meta = DatasetMeta::new(
        u64::from(w),
        u64::from(h),
        req.pixel_size_um,
        req.tile_size,
        names.iter().map(ChannelMeta::new).collect(),
        req.mask.is_some(),
    )?;

    let mask = req.mask.as_deref().map(read_tiff_u32).transpose()?;
    if let Some(mask) = &mask {
        let mask_ids: BTreeSet<u32> = mask
            .as_slice()
            .iter()
            .copied()
            .filter(|&v| v != 0)
            .collect();
        let missing: Vec<String> = mask_ids.difference(&csv_ids).map(u32::to_string).collect();
        if !missing.is_empty() {
            return Err(Error::Integrity(format!(
                "mask cell IDs missing from {}: {}",
                req.csv.display(),
                missing.join(", ")
            )));
        }
    }

    let mut writer = PyramidWriter::create(&req.out_dir, meta)?;
    for (path, name) in req.planes.iter().zip(&names) {
        writer.write_channel(name, read_tiff_u16(path)?)?;
    }
    if let Some(mask) = mask {
        writer.write_mask(mask)?;
    }
    let cells = req.out_dir.join(CELLS_FILE);
    std::fs::copy(&req.csv, &cells).map_err(|e| Error::io(&cells, e))?;
    writer.finish()
}

/// Writes level 0 of every channel (and the mask) as flat TIFFs plus the
/// cell table; the inverse of [`ingest`]. Returns the channel TIFF paths.
pub fn export_flat(handle: &DatasetHandle, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let meta = handle.meta();
    let full = RegionRect::new(0, 0, 0, meta.width_px, meta.height_px);
    let mut paths = Vec::new();
    for ch in &meta.channels {
        let path = out_dir.join(format!("{}.tif", ch.name));
        write_tiff_u16(&path, &handle.read_region(&ch.name, &full)?)?;
        paths.push(path);
    }
    if meta.has_mask {
        write_tiff_u32(&out_dir.join(MASK_TIFF), &handle.read_mask_region(&full)?)?;
    }
    let src = handle.root().join(CELLS_FILE);
    if src.exists() {
        let dst = out_dir.join(CELLS_FILE);
        std::fs::copy(&src, &dst).map_err(|e| Error::io(&dst, e))?;
    }
    Ok(paths)
}
