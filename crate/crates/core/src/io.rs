//! 8- and 16-bit grayscale/RGB PNG reading and writing.
//!
//! Decoding maps an n-bit sample `v` to `v / (2^n - 1)`; encoding rounds half
//! away from zero after clamping to `[0, 1]`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Read, Seek, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{ColorSpace, ImageBuffer};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

/// Decodes a PNG held in memory. Color images are tagged sRGB; grayscale
/// images are tagged `space`.
pub fn decode_png<R: Read + Seek>(reader: R, gray_space: ColorSpace) -> std::result::Result<ImageBuffer, String> {
    let mut decoder = png::Decoder::new(BufReader::new(reader));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or("image too large")?];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let (color, depth) = (info.color_type, info.bit_depth);
    let channels = match color {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => return Err(format!("unsupported PNG color type {other:?} (alpha is not supported)")),
    };
    let (h, w) = (info.height as usize, info.width as usize);
    let bytes = &buf[..info.buffer_size()];
    let data: Vec<f32> = match depth {
        png::BitDepth::Eight => bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        png::BitDepth::Sixteen => bytes
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f32 / 65535.0)
            .collect(),
        other => return Err(format!("unsupported bit depth {other:?}")),
    };
    let space = if channels == 3 { ColorSpace::Srgb } else { gray_space };
    ImageBuffer::new(h, w, channels, space, data).map_err(|e| e.to_string())
}

/// Reads a PNG from disk; grayscale files are tagged sRGB.
pub fn read_png(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    read_png_as(path, ColorSpace::Srgb)
}

/// Reads a PNG from disk, tagging grayscale files with `gray_space`.
pub fn read_png_as(path: impl AsRef<Path>, gray_space: ColorSpace) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_png(file, gray_space).map_err(|message| Error::Png {
        path: path.to_path_buf(),
        message,
    })
}

#[inline]
fn quantize(v: f32, max: f32) -> u16 {
    (v.clamp(0.0, 1.0) * max).round() as u16
}

/// Encodes `img` as PNG into `out`.
pub fn encode_png<W: Write>(out: W, img: &ImageBuffer, depth: BitDepth) -> std::result::Result<(), String> {
    let color = match img.channels() {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        _ => unreachable!("ImageBuffer guarantees 1 or 3 channels"),
    };
    let mut encoder = png::Encoder::new(out, img.width() as u32, img.height() as u32);
    encoder.set_color(color);
    let bytes: Vec<u8> = match depth {
        BitDepth::Eight => {
            encoder.set_depth(png::BitDepth::Eight);
            img.data().iter().map(|&v| quantize(v, 255.0) as u8).collect()
        }
        BitDepth::Sixteen => {
            encoder.set_depth(png::BitDepth::Sixteen);
            img.data()
                .iter()
                .flat_map(|&v| quantize(v, 65535.0).to_be_bytes())
                .collect()
        }
    };
    let mut writer = encoder.write_header().map_err(|e| e.to_string())?;
    writer.write_image_data(&bytes).map_err(|e| e.to_string())?;
    writer.finish().map_err(|e| e.to_string())
}

pub fn encode_png_bytes(img: &ImageBuffer, depth: BitDepth) -> Vec<u8> {
    let mut out = Vec::new();
    encode_png(Cursor::new(&mut out), img, depth).expect("in-memory PNG encoding cannot fail");
    out
}

pub fn write_png(path: impl AsRef<Path>, img: &ImageBuffer, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    encode_png(&mut writer, img, depth).map_err(|message| Error::Png {
        path: path.to_path_buf(),
        message,
    })?;
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Rounds every sample to the nearest 8-bit level, as a save/load cycle would.
pub fn quantize8(img: &ImageBuffer) -> ImageBuffer {
    img.map_values(|v| quantize(v, 255.0) as f32 / 255.0)
        .expect("quantized values are finite")
}
