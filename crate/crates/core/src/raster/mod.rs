//! Pixel-level kernels: luminance, Gaussian smoothing, Canny edges and the
//! progressive probabilistic Hough transform.

mod blur;
mod canny;
mod gray;
mod hough;
mod image;

pub use self::blur::{gaussian_blur, gaussian_kernel};
pub use self::canny::{canny, sobel, sobel_magnitude, CannyParams};
pub use self::gray::to_grayscale;
pub use self::hough::{ppht, rasterize_segment, HoughParams};
pub use self::image::{EdgeMap, GrayImage, Image};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RasterError {
    #[error("invalid raster dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("pixel buffer has {actual} entries, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
}
