//! The two-stage block detector: image area reduction followed by block
//! identification.

pub mod area;
pub mod blocks;
pub mod pipeline;

pub use self::area::{
    box_from_segments, detect_target_area, rectified_square, rectify, select_border_lines, AreaParams, Border,
    BorderLines, BoxDetection, RECTIFIED_SIZE,
};
pub use self::blocks::{
    assemble_squares, classify_color, color_of, filter_segments, square_candidates, ColorRule, DetectedBlock,
    FilterCriteria, Intersection, IntersectionGraph, SquareCandidate, SquareParams,
};
pub use self::pipeline::{
    detect_blocks, detect_frame, identify_blocks, run_pipeline, FrameDetection, PipelineConfig, PipelineTrace,
};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::raster::RasterError;
use crate::{LineSegment, Quad};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("incomplete perimeter: found {found} of 4 border lines")]
    IncompletePerimeter { found: usize, segments: Vec<LineSegment> },
    #[error("perimeter corners fall outside the frame")]
    CornersOutOfBounds { corners: Quad },
    #[error("ambiguous center color {rgb:?}")]
    AmbiguousColor { rgb: [u8; 3] },
    #[error("quad centroid lies outside the image")]
    CentroidOutside,
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}
