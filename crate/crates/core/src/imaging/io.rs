//! PNG and JPEG reading and writing.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::codecs::png::PngEncoder;
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};

use super::buffer::ImageBuffer;
use crate::error::{param, Error, Result};

/// Codec identity recorded in manifests. JPEG output is only promised to be
/// reproducible under the same codec build.
pub const CODEC_ID: &str = "image-rs/image 0.25 (png; jpeg encoder image::codecs::jpeg, decoder zune-jpeg)";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Jpeg { quality: u8 },
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Jpeg { .. } => "jpg",
        }
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let bytes = fs::read(path.as_ref())?;
    decode_image(&bytes)
}

/// Decodes PNG or JPEG bytes. Grayscale is replicated to three channels,
/// alpha is dropped.
pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer> {
    if bytes.is_empty() {
        return Err(Error::Format("empty file".into()));
    }
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::Format(e.to_string()))?;
    match reader.format() {
        Some(image::ImageFormat::Png | image::ImageFormat::Jpeg) => {}
        other => return Err(Error::Format(format!("unsupported image format {other:?}"))),
    }
    let decoded = reader.decode().map_err(|e| Error::Format(e.to_string()))?;
    Ok(from_dynamic(&decoded))
}

fn from_dynamic(img: &DynamicImage) -> ImageBuffer {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let wide = matches!(
        img,
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) | DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_)
    );
    let data = if wide {
        img.to_rgb16().into_raw().into_iter().map(|v| f32::from(v) / 65535.0).collect()
    } else {
        img.to_rgb8().into_raw().into_iter().map(|v| f32::from(v) / 255.0).collect()
    };
    ImageBuffer::from_raw_clamped(w, h, data)
}

/// 8-bit quantization with round-half-up.
pub fn to_rgb8(img: &ImageBuffer) -> Vec<u8> {
    img.data().iter().map(|&v| (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8).collect()
}

pub fn encode_image(img: &ImageBuffer, format: ImageFormat) -> Result<Vec<u8>> {
    let raw = to_rgb8(img);
    let (w, h) = (img.width() as u32, img.height() as u32);
    let mut out = Vec::new();
    match format {
        ImageFormat::Png => PngEncoder::new(&mut out)
            .write_image(&raw, w, h, ExtendedColorType::Rgb8)
            .map_err(|e| Error::Format(e.to_string()))?,
        ImageFormat::Jpeg { quality } => {
            if !(1..=100).contains(&quality) {
                return param(format!("jpeg quality must be in 1..=100, got {quality}"));
            }
            JpegEncoder::new_with_quality(&mut out, quality)
                .write_image(&raw, w, h, ExtendedColorType::Rgb8)
                .map_err(|e| Error::Format(e.to_string()))?
        }
    }
    Ok(out)
}

pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let bytes = encode_image(img, format)?;
    fs::write(path.as_ref(), bytes)?;
    Ok(())
}
