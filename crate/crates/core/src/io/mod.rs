//! Image files: binary PNM (bit-exact), PNG, and detection overlays.

mod overlay;
mod pnm;

pub use self::overlay::{draw_detection_overlay, draw_quad};
pub use self::pnm::{decode_pnm, encode_pbm, encode_pgm, encode_ppm};

use std::path::Path;

use thiserror::Error;

use crate::raster::{Image, RasterError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("unsupported image format")]
    UnsupportedFormat,
    #[error("malformed image: {0}")]
    Malformed(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("png codec: {0}")]
    Png(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Pnm,
    Png,
}

impl ImageFormat {
    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
            Some(Self::Png)
        } else if bytes.len() >= 2 && bytes[0] == b'P' && matches!(bytes[1], b'4' | b'5' | b'6') {
            Some(Self::Pnm)
        } else {
            None
        }
    }

    /// Format implied by a file extension; PNM otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "png" => Self::Png,
            _ => Self::Pnm,
        }
    }
}

/// Decodes PNG or binary PNM bytes into an RGB image.
pub fn decode_image(bytes: &[u8]) -> Result<Image, IoError> {
    match ImageFormat::sniff(bytes) {
        Some(ImageFormat::Pnm) => decode_pnm(bytes),
        Some(ImageFormat::Png) => decode_png(bytes),
        None => Err(IoError::UnsupportedFormat),
    }
}

pub fn decode_png(bytes: &[u8]) -> Result<Image, IoError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| IoError::Png(e.to_string()))?
        .into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(Image::from_raw(w, h, img.into_raw())?)
}

pub fn encode_png(img: &Image) -> Result<Vec<u8>, IoError> {
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.as_raw().to_vec())
        .ok_or_else(|| IoError::Malformed("buffer size".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| IoError::Png(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn read_image(path: &Path) -> Result<Image, IoError> {
    decode_image(&std::fs::read(path)?)
}

/// Writes PNG for a `.png` path and binary PPM otherwise.
pub fn write_image(path: &Path, img: &Image) -> Result<(), IoError> {
    let bytes = match ImageFormat::from_path(path) {
        ImageFormat::Png => encode_png(img)?,
        ImageFormat::Pnm => encode_ppm(img),
    };
    std::fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Image {
        let data = (0..5 * 3 * 3).map(|i| (i * 17 % 256) as u8).collect();
        Image::from_raw(5, 3, data).unwrap()
    }

    #[test]
    fn png_round_trip() {
        let img = sample();
        let bytes = encode_png(&img).unwrap();
        assert_eq!(ImageFormat::sniff(&bytes), Some(ImageFormat::Png));
        assert_eq!(decode_image(&bytes).unwrap(), img);
    }

    #[test]
    fn unknown_bytes_are_unsupported() {
        assert!(matches!(decode_image(b"GIF89a"), Err(IoError::UnsupportedFormat)));
        assert!(matches!(decode_image(b""), Err(IoError::UnsupportedFormat)));
    }
}
