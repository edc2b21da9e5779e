//! 8-bit PNG and binary PGM writers.

use crate::error::{CliError, CliResult};

fn encode_png(
    width: usize,
    height: usize,
    color: png::ColorType,
    data: &[u8],
) -> CliResult<Vec<u8>> {
    let err = |e: png::EncodingError| CliError::Domain(format!("png encoding: {e}"));
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(err)?;
    writer.write_image_data(data).map_err(err)?;
    writer.finish().map_err(err)?;
    Ok(out)
}

pub fn gray_png(width: usize, height: usize, pixels: &[u8]) -> CliResult<Vec<u8>> {
    encode_png(width, height, png::ColorType::Grayscale, pixels)
}

pub fn rgb_png(width: usize, height: usize, pixels: &[u8]) -> CliResult<Vec<u8>> {
    encode_png(width, height, png::ColorType::Rgb, pixels)
}

pub fn gray_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// `[lo, hi]` mapped linearly onto `0..=255`, clamped.
pub fn quantize(values: &[f32], lo: f32, hi: f32) -> Vec<u8> {
    values
        .iter()
        .map(|&v| (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}
