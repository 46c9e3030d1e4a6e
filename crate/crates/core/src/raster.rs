//! PNG encoding for rendered patches and raw tiles.

use std::io::Cursor;

use crate::error::{Error, Result};
use crate::image_store::Plane;
use crate::render::Rgba;

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Png(e.to_string())
}

fn encode(
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(depth);
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(data).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(buf)
}

pub fn encode_rgba(plane: &Plane<Rgba>) -> Result<Vec<u8>> {
    let data: Vec<u8> = plane.as_slice().iter().flatten().copied().collect();
    encode(
        plane.width(),
        plane.height(),
        png::ColorType::Rgba,
        png::BitDepth::Eight,
        &data,
    )
}

/// Lossless 16-bit greyscale PNG (big-endian samples).
pub fn encode_gray16(plane: &Plane<u16>) -> Result<Vec<u8>> {
    let data: Vec<u8> = plane
        .as_slice()
        .iter()
        .flat_map(|v| v.to_be_bytes())
        .collect();
    encode(
        plane.width(),
        plane.height(),
        png::ColorType::Grayscale,
        png::BitDepth::Sixteen,
        &data,
    )
}

fn decode(bytes: &[u8]) -> Result<(png::OutputInfo, Vec<u8>)> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(png_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    buf.truncate(info.buffer_size());
    Ok((info, buf))
}

pub fn decode_rgba(bytes: &[u8]) -> Result<Plane<Rgba>> {
    let (info, buf) = decode(bytes)?;
    if info.color_type != png::ColorType::Rgba || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Png(format!(
            "expected RGBA8, got {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let px = buf
        .chunks_exact(4)
        .map(|c| [c[0], c[1], c[2], c[3]])
        .collect();
    Plane::from_vec(info.width as usize, info.height as usize, px)
}

pub fn decode_gray16(bytes: &[u8]) -> Result<Plane<u16>> {
    let (info, buf) = decode(bytes)?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::Png(format!(
            "expected Gray16, got {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let px = buf
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Plane::from_vec(info.width as usize, info.height as usize, px)
}
