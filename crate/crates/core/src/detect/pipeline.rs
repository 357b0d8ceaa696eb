use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::area::{detect_target_area, rectify, AreaParams, BoxDetection};
use super::blocks::{
    assemble_squares, classify_color, filter_segments, ColorRule, DetectedBlock, FilterCriteria,
    IntersectionGraph, SquareParams,
};
use super::DetectError;
use crate::raster::{canny, ppht, to_grayscale, CannyParams, HoughParams, Image};
use crate::{LineSegment, Quad};

/// Every knob of the two-stage detector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct PipelineConfig {
    pub canny: CannyParams,
    pub hough: HoughParams,
    pub area: AreaParams,
    pub criteria: FilterCriteria,
    pub squares: SquareParams,
    pub color: ColorRule,
    /// Seed for the Hough transform's pixel ordering.
    pub seed: u64,
    /// Keep detecting on the unrectified frame when the perimeter is incomplete.
    pub legacy_proceed: bool,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        self.canny.validate()?;
        self.hough.validate()?;
        let c = &self.criteria;
        let s = &self.squares;
        if !(c.right_angle_tol > 0.0 && c.endpoint_dist > 0.0 && c.segment_dist > 0.0 && c.extension >= 0.0) {
            return Err(DetectError::InvalidConfig("filter criteria must be positive"));
        }
        if !(s.side_min > 0.0 && s.side_min <= s.side_max && s.spread_tol > 0.0) {
            return Err(DetectError::InvalidConfig("square size bounds"));
        }
        Ok(())
    }
}

/// Intermediate products of one pipeline run, for overlays and diagnostics.
#[derive(Clone, Debug)]
pub struct PipelineTrace {
    pub area: Result<BoxDetection, DetectError>,
    /// The frame stage 2 ran on: rectified, or the raw frame under legacy mode.
    pub working: Option<Image>,
    pub rectified: bool,
    pub segments: Vec<LineSegment>,
    pub graph: IntersectionGraph,
    pub quads: Vec<Quad>,
    pub blocks: Vec<DetectedBlock>,
    /// Quads dropped because their center color was ambiguous.
    pub ambiguous: Vec<Quad>,
}

impl PipelineTrace {
    pub fn result(&self) -> Result<&[DetectedBlock], DetectError> {
        if self.working.is_none() {
            if let Err(e) = &self.area {
                return Err(e.clone());
            }
        }
        Ok(&self.blocks)
    }
}

/// Stage 2 on an already rectified (or legacy raw) frame.
pub fn identify_blocks(
    frame: &Image,
    cfg: &PipelineConfig,
) -> (Vec<LineSegment>, IntersectionGraph, Vec<Quad>, Vec<DetectedBlock>, Vec<Quad>) {
    let edges = canny(&to_grayscale(frame), &cfg.canny);
    let segments = ppht(&edges, &cfg.hough, cfg.seed);
    let graph = filter_segments(&segments, &cfg.criteria);
    let quads = assemble_squares(&graph, &cfg.squares);
    let mut blocks = Vec::new();
    let mut ambiguous = Vec::new();
    for q in &quads {
        match classify_color(frame, q, &cfg.color) {
            Ok(color) => blocks.push(DetectedBlock::new(*q, color)),
            Err(e) => {
                debug!("dropping quad at {:?}: {e}", q.centroid());
                ambiguous.push(*q);
            }
        }
    }
    (segments, graph, quads, blocks, ambiguous)
}

/// Full two-stage run keeping every intermediate.
pub fn run_pipeline(img: &Image, cfg: &PipelineConfig) -> PipelineTrace {
    let area = detect_target_area(img, &cfg.canny, &cfg.hough, &cfg.area, cfg.seed);
    let (working, rectified) = match &area {
        Ok(b) => match rectify(img, b) {
            Ok(r) => (Some(r), true),
            Err(e) => {
                return PipelineTrace::aborted(Err(e));
            }
        },
        Err(e) if cfg.legacy_proceed => {
            warn!("{e}; proceeding on the unrectified frame");
            (Some(img.clone()), false)
        }
        Err(_) => return PipelineTrace::aborted(area),
    };
    let frame = working.as_ref().expect("working frame set");
    let (segments, graph, quads, blocks, ambiguous) = identify_blocks(frame, cfg);
    PipelineTrace {
        area,
        working,
        rectified,
        segments,
        graph,
        quads,
        blocks,
        ambiguous,
    }
}

impl PipelineTrace {
    fn aborted(area: Result<BoxDetection, DetectError>) -> Self {
        Self {
            area,
            working: None,
            rectified: false,
            segments: Vec::new(),
            graph: IntersectionGraph::default(),
            quads: Vec::new(),
            blocks: Vec::new(),
            ambiguous: Vec::new(),
        }
    }
}

/// Detects block tops. In strict mode an incomplete perimeter aborts the frame.
pub fn detect_blocks(img: &Image, cfg: &PipelineConfig) -> Result<Vec<DetectedBlock>, DetectError> {
    let trace = run_pipeline(img, cfg);
    trace.result().map(|b| b.to_vec())
}

/// Detection record exchanged as JSON with the service and the assessment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FrameDetection {
    pub frame_id: u64,
    pub blocks: Vec<DetectedBlock>,
    pub aborted: bool,
    pub abort_reason: Option<String>,
}

impl FrameDetection {
    pub fn from_result(frame_id: u64, r: Result<Vec<DetectedBlock>, DetectError>) -> Self {
        match r {
            Ok(blocks) => Self {
                frame_id,
                blocks,
                aborted: false,
                abort_reason: None,
            },
            Err(e) => Self::aborted(frame_id, e.to_string()),
        }
    }

    pub fn aborted(frame_id: u64, reason: String) -> Self {
        Self {
            frame_id,
            blocks: Vec::new(),
            aborted: true,
            abort_reason: Some(reason),
        }
    }

    pub fn empty(frame_id: u64) -> Self {
        Self::from_result(frame_id, Ok(Vec::new()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("detection serializes")
    }
}

/// Runs the pipeline and packages the outcome as a detection record.
pub fn detect_frame(img: &Image, cfg: &PipelineConfig, frame_id: u64) -> FrameDetection {
    FrameDetection::from_result(frame_id, detect_blocks(img, cfg))
}
