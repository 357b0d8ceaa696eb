//! Planar primitives shared by both detection stages. Everything here is
//! generic over the scalar type; the pipeline instantiates it with `f64`.

mod homography;
mod point;
mod quad;
mod segment;
mod warp;

pub use self::homography::{homography_from_quads, Homography};
pub use self::point::{mean_point, Point2};
pub use self::quad::{order_corners, Quad};
pub use self::segment::{is_right_angle, line_intersection, segment_intersection, LineCrossing, Segment};
pub use self::warp::warp;

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GeometryError {
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("quad is degenerate (zero area or ambiguous ordering)")]
    DegenerateQuad,
    #[error("homography system is singular")]
    SingularSystem,
}
