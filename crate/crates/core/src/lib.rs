//! Vision pipeline, session protocol and assessment for a three-color
//! Box and Blocks task.
//!
//! The geometry is generic over [`scalar::Real`]; the aliases below fix it to
//! `f64`, which is what the detection pipeline uses.

pub mod geometry;
pub mod raster;
pub mod rng;
pub mod scalar;

pub type Point = geometry::Point2<f64>;
pub type LineSegment = geometry::Segment<f64>;
pub type Quad = geometry::Quad<f64>;
pub type Homography = geometry::Homography<f64>;

pub mod color;
pub mod detect;
pub mod scene;
pub mod session;
pub mod assessment;
pub mod io;

pub use color::{BlockColor, ColorCounts};
