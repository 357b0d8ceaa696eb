//! Synthetic box-and-blocks scenes with exact ground truth.
//!
//! A scene is described in the rectified 400x400 frame of the target area and
//! rendered into a camera frame through the inverse rectification homography,
//! so every block top's true position is known in both frames.

mod fault;
mod random;

pub use self::fault::{inject_fault, persistent_error_sequence, FaultKind, SequenceFrame};
pub use self::random::{bench_scene, max_skew_deg, random_scene, PerturbLevel, INVENTORY};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::BlockColor;
use crate::detect::{rectified_square, DetectedBlock, RECTIFIED_SIZE};
use crate::geometry::{homography_from_quads, order_corners, GeometryError};
use crate::raster::Image;
use crate::rng::SplitMix64;
use crate::{Homography, Point, Quad};

/// Width in rectified pixels of the dark rim drawn around each block top.
pub const BLOCK_RIM: f64 = 2.0;
/// Half-width of the painted box perimeter, camera pixels.
pub const PERIMETER_HALF_WIDTH: f64 = 1.5;
pub const PERIMETER_RGB: [u8; 3] = [40, 40, 40];
pub const DEFAULT_BACKGROUND: [u8; 3] = [200, 200, 200];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("could not place blocks after {0} rejections")]
    PlacementFailure(usize),
    #[error("block {index} is invalid: {reason}")]
    InvalidBlock { index: usize, reason: &'static str },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A block; `center` is in rectified coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SceneBlock {
    pub center: Point,
    pub side: f64,
    /// Rotation of the top in degrees.
    #[serde(default)]
    pub rotation: f64,
    pub color: BlockColor,
    /// Extra width of visible side faces toward +u/+v (local axes), rectified pixels.
    #[serde(default)]
    pub side_face: f64,
    /// Marks a wrong-color placement that persists across frames.
    #[serde(default)]
    pub persistent_error: bool,
}

impl SceneBlock {
    pub fn new(center: Point, side: f64, rotation: f64, color: BlockColor) -> Self {
        Self {
            center,
            side,
            rotation,
            color,
            side_face: 0.0,
            persistent_error: false,
        }
    }

    /// Corners of the top face in rectified coordinates.
    pub fn top_quad(&self) -> Quad {
        let h = self.side / 2.0;
        let (s, c) = self.rotation.to_radians().sin_cos();
        let pts = [(-h, -h), (h, -h), (h, h), (-h, h)]
            .map(|(u, v)| Point::new(self.center.x + u * c - v * s, self.center.y + u * s + v * c));
        order_corners(pts).unwrap_or(Quad::from_ordered(pts))
    }

    /// Radius of a circle enclosing the whole footprint.
    pub fn footprint_radius(&self) -> f64 {
        (self.side / 2.0 + BLOCK_RIM + self.side_face) * std::f64::consts::SQRT_2
    }

    fn local(&self, q: Point) -> (f64, f64) {
        let d = q - self.center;
        let (s, c) = self.rotation.to_radians().sin_cos();
        (d.x * c + d.y * s, -d.x * s + d.y * c)
    }

    fn sample(&self, q: Point) -> Option<[u8; 3]> {
        let d = q - self.center;
        let r = self.footprint_radius();
        if d.x.abs() > r || d.y.abs() > r {
            return None;
        }
        let (u, v) = self.local(q);
        let h = self.side / 2.0;
        if u.abs() <= h && v.abs() <= h {
            return Some(self.color.rgb());
        }
        let face = h + self.side_face;
        if u >= -h && u <= face && v >= -h && v <= face {
            return Some(self.color.rgb().map(|c| (c as f64 * 0.8).round() as u8));
        }
        let lo = -h - BLOCK_RIM;
        let hi = face + BLOCK_RIM;
        if u >= lo && u <= hi && v >= lo && v <= hi {
            return Some(self.color.rgb().map(|c| (c as f64 * 0.15).round() as u8));
        }
        None
    }
}

/// A flat square of color with no rim (spurious texture).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Patch {
    pub center: Point,
    pub side: f64,
    #[serde(default)]
    pub rotation: f64,
    pub rgb: [u8; 3],
}

/// An opaque quad drawn over everything else; corners in rectified coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Occluder {
    pub corners: Quad,
    pub rgb: [u8; 3],
}

fn default_width() -> usize {
    640
}

fn default_height() -> usize {
    480
}

fn default_background() -> [u8; 3] {
    DEFAULT_BACKGROUND
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SceneSpec {
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height")]
    pub height: usize,
    /// Camera-frame corners of the target area (TL, TR, BR, BL).
    pub box_quad: Quad,
    /// Blocks inside the target area.
    #[serde(default)]
    pub blocks: Vec<SceneBlock>,
    /// Blocks outside the target area (the far side of the divider).
    #[serde(default)]
    pub distractors: Vec<SceneBlock>,
    #[serde(default)]
    pub patches: Vec<Patch>,
    #[serde(default)]
    pub occluders: Vec<Occluder>,
    #[serde(default = "default_background")]
    pub background: [u8; 3],
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    /// Empty scene with the default axis-aligned box placement.
    pub fn empty(seed: u64) -> Self {
        Self {
            width: 640,
            height: 480,
            box_quad: Quad::axis_square(120.0, 40.0, 400.0),
            blocks: Vec::new(),
            distractors: Vec::new(),
            patches: Vec::new(),
            occluders: Vec::new(),
            background: DEFAULT_BACKGROUND,
            noise_sigma: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let size = RECTIFIED_SIZE as f64;
        for (index, b) in self.blocks.iter().enumerate() {
            if b.side < 10.0 {
                return Err(SceneError::InvalidBlock {
                    index,
                    reason: "side shorter than 10 px",
                });
            }
            let inside = b.top_quad().corners.iter().all(|p| p.x >= 0.0 && p.y >= 0.0 && p.x <= size && p.y <= size);
            if !inside {
                return Err(SceneError::InvalidBlock {
                    index,
                    reason: "block outside the target area",
                });
            }
        }
        self.camera_to_rectified()?;
        Ok(())
    }

    pub fn camera_to_rectified(&self) -> Result<Homography, SceneError> {
        Ok(homography_from_quads(&self.box_quad, &rectified_square())?)
    }

    pub fn rectified_to_camera(&self) -> Result<Homography, SceneError> {
        Ok(homography_from_quads(&rectified_square(), &self.box_quad)?)
    }

    /// Block tops as an ideal detector would report them (rectified frame).
    pub fn ground_truth(&self) -> Vec<DetectedBlock> {
        self.blocks
            .iter()
            .map(|b| DetectedBlock::new(b.top_quad(), b.color))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    fn sample(&self, cam: Point, to_rect: &Homography) -> [u8; 3] {
        let q = to_rect.apply(cam);
        let mut rgb = self.background;
        for b in self.distractors.iter().chain(self.blocks.iter()) {
            if let Some(c) = b.sample(q) {
                rgb = c;
            }
        }
        for p in &self.patches {
            let d = q - p.center;
            let (s, c) = p.rotation.to_radians().sin_cos();
            let (u, v) = (d.x * c + d.y * s, -d.x * s + d.y * c);
            if u.abs() <= p.side / 2.0 && v.abs() <= p.side / 2.0 {
                rgb = p.rgb;
            }
        }
        let corners = &self.box_quad.corners;
        for i in 0..4 {
            let a = corners[i];
            let b = corners[(i + 1) % 4];
            if point_segment_distance(cam, a, b) <= PERIMETER_HALF_WIDTH {
                rgb = PERIMETER_RGB;
            }
        }
        for o in &self.occluders {
            if o.corners.contains(q) {
                rgb = o.rgb;
            }
        }
        rgb
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
    p.distance(a + d.scale(t))
}

/// Renders the scene: 2x2 supersampled geometry, then Gaussian pixel noise
/// drawn from the scene seed.
pub fn render_scene(spec: &SceneSpec) -> Result<Image, SceneError> {
    let to_rect = spec.camera_to_rectified()?;
    let (w, h) = (spec.width.max(1), spec.height.max(1));
    let offsets = [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)];
    let mut acc = vec![0f64; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let o = (y * w + x) * 3;
            for (dx, dy) in offsets {
                let rgb = spec.sample(Point::new(x as f64 + dx, y as f64 + dy), &to_rect);
                for c in 0..3 {
                    acc[o + c] += rgb[c] as f64 * 0.25;
                }
            }
        }
    }
    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).expect("finite sigma");
        let mut rng = SplitMix64::new(spec.seed ^ 0x6E6F_6973_655F_5345);
        for v in acc.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    let data = acc.into_iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    Ok(Image::from_raw(w, h, data).expect("positive dimensions"))
}

/// Detection quality of one frame against its ground truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchStats {
    pub truth: usize,
    pub detected: usize,
    pub matched: usize,
    pub color_correct: usize,
}

impl MatchStats {
    pub fn add(&mut self, o: &MatchStats) {
        self.truth += o.truth;
        self.detected += o.detected;
        self.matched += o.matched;
        self.color_correct += o.color_correct;
    }

    pub fn precision(&self) -> f64 {
        if self.detected == 0 {
            1.0
        } else {
            self.matched as f64 / self.detected as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.truth == 0 {
            1.0
        } else {
            self.matched as f64 / self.truth as f64
        }
    }

    pub fn color_accuracy(&self) -> f64 {
        if self.matched == 0 {
            1.0
        } else {
            self.color_correct as f64 / self.matched as f64
        }
    }
}

/// Greedy one-to-one matching by centroid distance, closest pairs first;
/// a pair matches when the distance is at most 0.35 of the true side.
pub fn match_detections(truth: &[DetectedBlock], detected: &[DetectedBlock]) -> MatchStats {
    let mut pairs = Vec::new();
    for (i, t) in truth.iter().enumerate() {
        for (j, d) in detected.iter().enumerate() {
            let dist = t.center().distance(d.center());
            if dist <= 0.35 * t.side_length {
                pairs.push((dist, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut used_t = vec![false; truth.len()];
    let mut used_d = vec![false; detected.len()];
    let mut stats = MatchStats {
        truth: truth.len(),
        detected: detected.len(),
        ..Default::default()
    };
    for (_, i, j) in pairs {
        if used_t[i] || used_d[j] {
            continue;
        }
        used_t[i] = true;
        used_d[j] = true;
        stats.matched += 1;
        if truth[i].color == detected[j].color {
            stats.color_correct += 1;
        }
    }
    stats
}
