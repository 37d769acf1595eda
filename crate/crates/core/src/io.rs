//! Grayscale image I/O: PGM (P5 binary, P2 ASCII) and grayscale PNG in,
//! PGM P5 out. Intensities live on the 0..=255 scale.

use std::fs;
use std::io::{BufReader, Cursor};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField2D;
use crate::levelset::Mask;

fn io_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Io { path: path.to_path_buf(), reason: reason.into() }
}

/// Reads a PGM or grayscale PNG file into a field on the 0..=255 scale.
pub fn load_image(path: impl AsRef<Path>) -> Result<ScalarField2D> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e.to_string()))?;
    decode_image(&bytes).map_err(|reason| io_err(path, reason))
}

/// Decodes an in-memory PGM or grayscale PNG.
pub fn decode_image(bytes: &[u8]) -> std::result::Result<ScalarField2D, String> {
    if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        decode_pgm(bytes)
    } else {
        Err("unsupported format (expected PGM P2/P5 or grayscale PNG)".into())
    }
}

fn decode_pgm(bytes: &[u8]) -> std::result::Result<ScalarField2D, String> {
    let binary = bytes[1] == b'5';
    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in &mut header {
        *slot = next_token(bytes, &mut pos)?.parse().map_err(|_| "malformed PGM header".to_string())?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err(format!("zero image dimension {width}x{height}"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported PGM maxval {maxval} (8-bit only)"));
    }
    let n = width * height;
    let scale = 255.0 / maxval as f64;
    let values: Vec<f64> = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let start = pos + 1;
        let raster = bytes.get(start..start + n).ok_or_else(|| format!("truncated raster: expected {n} bytes"))?;
        raster.iter().map(|&b| b as f64 * scale).collect()
    } else {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let v: usize = next_token(bytes, &mut pos)?.parse().map_err(|_| "malformed PGM sample".to_string())?;
            if v > maxval {
                return Err(format!("sample {v} exceeds maxval {maxval}"));
            }
            out.push(v as f64 * scale);
        }
        out
    };
    ScalarField2D::from_vec(width, height, values).map_err(|e| e.to_string())
}

/// Next whitespace-delimited token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> std::result::Result<&'a str, String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err("unexpected end of PGM data".into());
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| "non-ASCII PGM token".into())
}

fn decode_png(bytes: &[u8]) -> std::result::Result<ScalarField2D, String> {
    let mut decoder = png::Decoder::new(BufReader::new(Cursor::new(bytes)));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or("PNG too large")?];
    let frame = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let (width, height) = (frame.width as usize, frame.height as usize);
    if width == 0 || height == 0 {
        return Err(format!("zero image dimension {width}x{height}"));
    }
    let channels = match frame.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        other => return Err(format!("unsupported PNG color type {other:?} (grayscale only)")),
    };
    let data = &buf[..frame.buffer_size()];
    let values = match frame.bit_depth {
        png::BitDepth::Sixteen => data
            .chunks_exact(2 * channels)
            .map(|px| u16::from_be_bytes([px[0], px[1]]) as f64 * 255.0 / 65535.0)
            .collect(),
        _ => data.chunks_exact(channels).map(|px| px[0] as f64).collect(),
    };
    ScalarField2D::from_vec(width, height, values).map_err(|e| e.to_string())
}

/// Encodes a field as PGM P5, clamping to 0..=255 and rounding.
pub fn encode_pgm(field: &ScalarField2D) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", field.width(), field.height()).into_bytes();
    out.extend(field.values().iter().map(|v| v.clamp(0.0, 255.0).round() as u8));
    out
}

/// Writes a field as a binary PGM.
pub fn save_image(field: &ScalarField2D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(field)).map_err(|e| io_err(path, e.to_string()))
}

/// Writes a mask as a binary PGM with 255 for set pixels.
pub fn save_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    save_image(&mask.to_field(255.0), path)
}

/// Copy of `image` with the boundary pixels of every mask set to 255.
pub fn contour_overlay(image: &ScalarField2D, masks: &[Mask]) -> ScalarField2D {
    let mut out = image.clone();
    for m in masks {
        for (v, &b) in out.values_mut().iter_mut().zip(m.boundary().bits()) {
            if b {
                *v = 255.0;
            }
        }
    }
    out
}
