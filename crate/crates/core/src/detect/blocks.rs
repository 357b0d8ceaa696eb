//! Block identification: filter Hough segments down to square candidates,
//! walk closed paths of intersections, and read the color at each center.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::DetectError;
use crate::color::BlockColor;
use crate::geometry::{is_right_angle, order_corners, segment_intersection};
use crate::raster::Image;
use crate::{LineSegment, Point, Quad};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FilterCriteria {
    /// Allowed deviation from 90 degrees.
    pub right_angle_tol: f64,
    /// Max distance from a segment endpoint to one of its right-angle crossings.
    pub endpoint_dist: f64,
    /// Max gap between a segment and a perpendicular partner it crosses.
    pub segment_dist: f64,
    /// How far past its endpoints a segment may be extended to meet another.
    pub extension: f64,
}

impl Default for FilterCriteria {
    fn default() -> Self {
        Self {
            right_angle_tol: 10.0,
            endpoint_dist: 10.0,
            segment_dist: 10.0,
            extension: 10.0,
        }
    }
}

/// A right-angle crossing between two surviving segments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intersection {
    pub point: Point,
    /// Indices into [`IntersectionGraph::segments`], `seg_a < seg_b`.
    pub seg_a: usize,
    pub seg_b: usize,
    pub angle: f64,
}

impl Intersection {
    fn other(&self, seg: usize) -> usize {
        if self.seg_a == seg {
            self.seg_b
        } else {
            self.seg_a
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntersectionGraph {
    pub segments: Vec<LineSegment>,
    pub intersections: Vec<Intersection>,
    /// For each segment, the intersections it takes part in.
    pub incidence: Vec<Vec<usize>>,
}

impl IntersectionGraph {
    fn build(segments: Vec<LineSegment>, c: &FilterCriteria) -> Self {
        let crossings = right_angle_crossings(&segments, c);
        let mut incidence = vec![Vec::new(); segments.len()];
        for (k, x) in crossings.iter().enumerate() {
            incidence[x.seg_a].push(k);
            incidence[x.seg_b].push(k);
        }
        Self {
            segments,
            intersections: crossings,
            incidence,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

fn right_angle_crossings(segs: &[LineSegment], c: &FilterCriteria) -> Vec<Intersection> {
    let mut out = Vec::new();
    for i in 0..segs.len() {
        for j in (i + 1)..segs.len() {
            if let Some(x) = segment_intersection(&segs[i], &segs[j], c.extension) {
                if is_right_angle(x.angle, c.right_angle_tol) {
                    out.push(Intersection {
                        point: x.point,
                        seg_a: i,
                        seg_b: j,
                        angle: x.angle,
                    });
                }
            }
        }
    }
    out
}

fn keep(segs: &[LineSegment], pred: impl Fn(usize) -> bool) -> Vec<LineSegment> {
    (0..segs.len()).filter(|&i| pred(i)).map(|i| segs[i]).collect()
}

/// Applies the three segment criteria as successive passes:
///
/// 1. the segment meets another at a right angle at least once;
/// 2. one of its endpoints lies within `endpoint_dist` of such a crossing;
/// 3. it lies within `segment_dist` of a perpendicular partner.
///
/// Crossings are recomputed among the survivors of each pass. Segments left
/// without any crossing at the end are dropped, so every segment in the graph
/// takes part in at least one right-angle intersection.
pub fn filter_segments(segs: &[LineSegment], c: &FilterCriteria) -> IntersectionGraph {
    let g = IntersectionGraph::build(segs.to_vec(), c);
    let pass1 = keep(&g.segments, |i| !g.incidence[i].is_empty());

    let g = IntersectionGraph::build(pass1, c);
    let pass2 = keep(&g.segments, |i| {
        let s = &g.segments[i];
        g.incidence[i]
            .iter()
            .any(|&k| s.endpoint_distance(g.intersections[k].point) <= c.endpoint_dist)
    });

    let g = IntersectionGraph::build(pass2, c);
    let pass3 = keep(&g.segments, |i| {
        let s = &g.segments[i];
        g.incidence[i].iter().any(|&k| {
            let partner = &g.segments[g.intersections[k].other(i)];
            s.distance_to_segment(partner) <= c.segment_dist
        })
    });

    let g = IntersectionGraph::build(pass3, c);
    let connected = keep(&g.segments, |i| !g.incidence[i].is_empty());
    IntersectionGraph::build(connected, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SquareParams {
    pub side_min: f64,
    pub side_max: f64,
    /// Allowed relative spread `(max - min) / mean` of the four sides.
    pub spread_tol: f64,
}

impl Default for SquareParams {
    fn default() -> Self {
        Self {
            side_min: 20.0,
            side_max: 60.0,
            spread_tol: 0.25,
        }
    }
}

/// A closed four-corner path through the intersection graph.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareCandidate {
    pub quad: Quad,
    /// Intersection indices along the path.
    pub path: [usize; 4],
    pub spread: f64,
}

/// Enumerates 4-cycles of intersections linked by shared segments and keeps
/// those with a consistent turn direction, near-equal sides and a mean side
/// within `[side_min, side_max]`.
pub fn square_candidates(g: &IntersectionGraph, p: &SquareParams) -> Vec<SquareCandidate> {
    let xs = &g.intersections;
    let mut seen: HashSet<[usize; 4]> = HashSet::new();
    let mut out = Vec::new();
    for i0 in 0..xs.len() {
        let x0 = xs[i0];
        // Leave i0 along one segment and come back along the other.
        for (s1, s4) in [(x0.seg_a, x0.seg_b), (x0.seg_b, x0.seg_a)] {
            for &i1 in &g.incidence[s1] {
                if i1 == i0 {
                    continue;
                }
                let s2 = xs[i1].other(s1);
                if s2 == s4 {
                    continue;
                }
                for &i2 in &g.incidence[s2] {
                    if i2 == i1 || i2 == i0 {
                        continue;
                    }
                    let s3 = xs[i2].other(s2);
                    if s3 == s1 || s3 == s4 {
                        continue;
                    }
                    for &i3 in &g.incidence[s3] {
                        if i3 == i2 || i3 == i1 || i3 == i0 {
                            continue;
                        }
                        if xs[i3].other(s3) != s4 {
                            continue;
                        }
                        let mut key = [i0, i1, i2, i3];
                        key.sort_unstable();
                        if !seen.insert(key) {
                            continue;
                        }
                        if let Some(c) = accept_cycle(g, [i0, i1, i2, i3], p) {
                            out.push(c);
                        }
                    }
                }
            }
        }
    }
    out
}

fn accept_cycle(g: &IntersectionGraph, path: [usize; 4], p: &SquareParams) -> Option<SquareCandidate> {
    let pts = path.map(|i| g.intersections[i].point);
    let mut sign = 0.0f64;
    for k in 0..4 {
        let a = pts[(k + 1) % 4] - pts[k];
        let b = pts[(k + 2) % 4] - pts[(k + 1) % 4];
        let z = a.cross(b);
        if z == 0.0 || (sign != 0.0 && z.signum() != sign) {
            return None;
        }
        sign = z.signum();
    }
    let quad = order_corners(pts).ok()?;
    let spread = quad.side_spread();
    let mean = quad.mean_side();
    if spread > p.spread_tol || mean < p.side_min || mean > p.side_max {
        return None;
    }
    Some(SquareCandidate { quad, path, spread })
}

/// Square tops found in the graph.
///
/// Cycles sharing three or more intersections are merged (smaller side spread
/// wins). Remaining quads that overlap by half or more of the smaller one's
/// area are suppressed, preferring the lower spread band (0.05 wide) and then
/// the larger area, i.e. the outer silhouette of a block.
pub fn assemble_squares(g: &IntersectionGraph, p: &SquareParams) -> Vec<Quad> {
    let mut cands = square_candidates(g, p);
    cands.sort_by(|a, b| a.spread.total_cmp(&b.spread).then(a.path.cmp(&b.path)));

    let mut merged: Vec<SquareCandidate> = Vec::new();
    for c in cands {
        let dup = merged
            .iter()
            .any(|m| m.path.iter().filter(|i| c.path.contains(i)).count() >= 3);
        if !dup {
            merged.push(c);
        }
    }

    let bucket = |s: f64| (s / 0.05).floor() as i64;
    merged.sort_by(|a, b| {
        bucket(a.spread)
            .cmp(&bucket(b.spread))
            .then(b.quad.area().total_cmp(&a.quad.area()))
            .then(a.path.cmp(&b.path))
    });
    let mut kept: Vec<Quad> = Vec::new();
    for c in merged {
        let clash = kept.iter().any(|k| {
            let min_area = k.area().min(c.quad.area());
            k.overlap_area(&c.quad) >= 0.5 * min_area
        });
        if !clash {
            kept.push(c.quad);
        }
    }
    kept
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ColorRule {
    /// Read only the center pixel instead of the 3x3 median.
    pub single_pixel: bool,
    /// Minimum lead of the strongest channel over the runner-up.
    pub ambiguity_margin: u8,
}

impl Default for ColorRule {
    fn default() -> Self {
        Self {
            single_pixel: false,
            ambiguity_margin: 10,
        }
    }
}

/// Channel-wise sample at the quad's centroid (3x3 median unless
/// `single_pixel`), classified by its strongest channel.
pub fn classify_color(img: &Image, q: &Quad, rule: &ColorRule) -> Result<BlockColor, DetectError> {
    let c = q.centroid();
    let (cx, cy) = (c.x.round(), c.y.round());
    if !(cx >= 0.0 && cy >= 0.0 && cx < img.width() as f64 && cy < img.height() as f64) {
        return Err(DetectError::CentroidOutside);
    }
    let (cx, cy) = (cx as i64, cy as i64);
    let rgb = if rule.single_pixel {
        img.get(cx as usize, cy as usize)
    } else {
        let mut ch = [[0u8; 9]; 3];
        let mut n = 0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let x = (cx + dx).clamp(0, img.width() as i64 - 1) as usize;
                let y = (cy + dy).clamp(0, img.height() as i64 - 1) as usize;
                let p = img.get(x, y);
                for k in 0..3 {
                    ch[k][n] = p[k];
                }
                n += 1;
            }
        }
        ch.map(|mut v| {
            v.sort_unstable();
            v[4]
        })
    };
    color_of(rgb, rule.ambiguity_margin)
}

/// Strongest channel of an RGB sample, or `AmbiguousColor` when the top two
/// differ by less than `margin`.
pub fn color_of(rgb: [u8; 3], margin: u8) -> Result<BlockColor, DetectError> {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| rgb[b].cmp(&rgb[a]));
    if rgb[order[0]] - rgb[order[1]] < margin {
        return Err(DetectError::AmbiguousColor { rgb });
    }
    Ok(BlockColor::ALL[order[0]])
}

/// A detected block top.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectedBlock {
    #[serde(rename = "corners")]
    pub top: Quad,
    pub color: BlockColor,
    #[serde(rename = "side")]
    pub side_length: f64,
}

impl DetectedBlock {
    pub fn new(top: Quad, color: BlockColor) -> Self {
        Self {
            side_length: top.mean_side(),
            top,
            color,
        }
    }

    pub fn center(&self) -> Point {
        self.top.centroid()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> LineSegment {
        LineSegment::from_coords(x1, y1, x2, y2)
    }

    /// Four sides of an axis-aligned square, each pulled back from the corners.
    fn square_sides(x: f64, y: f64, side: f64, undershoot: f64) -> Vec<LineSegment> {
        let u = undershoot;
        vec![
            seg(x + u, y, x + side - u, y),
            seg(x + side, y + u, x + side, y + side - u),
            seg(x + side - u, y + side, x + u, y + side),
            seg(x, y + side - u, x, y + u),
        ]
    }

    #[test]
    fn empty_input_empty_graph() {
        let g = filter_segments(&[], &FilterCriteria::default());
        assert!(g.is_empty());
        assert!(g.intersections.is_empty());
    }

    #[test]
    fn oblique_crossing_is_rejected() {
        let g = filter_segments(&[seg(0., 0., 40., 0.), seg(0., -20., 40., 20.)], &FilterCriteria::default());
        assert!(g.is_empty());
    }

    #[test]
    fn undershot_square_survives() {
        let g = filter_segments(&square_sides(100., 100., 30., 3.), &FilterCriteria::default());
        assert_eq!(g.segments.len(), 4);
        assert_eq!(g.intersections.len(), 4);
    }

    #[test]
    fn perfect_square_assembled_once() {
        let g = filter_segments(&square_sides(100., 100., 30., 0.), &FilterCriteria::default());
        let qs = assemble_squares(&g, &SquareParams::default());
        assert_eq!(qs.len(), 1);
        let expect = Quad::axis_square(100., 100., 30.);
        for (a, b) in qs[0].corners.iter().zip(expect.corners.iter()) {
            assert!(a.distance(*b) < 1.0);
        }
    }

    #[test]
    fn open_path_gives_nothing() {
        let mut sides = square_sides(100., 100., 30., 0.);
        sides.pop();
        let g = filter_segments(&sides, &FilterCriteria::default());
        assert!(assemble_squares(&g, &SquareParams::default()).is_empty());
    }

    #[test]
    fn size_filter_bounds() {
        let g = filter_segments(&square_sides(100., 100., 80., 0.), &FilterCriteria::default());
        assert!(assemble_squares(&g, &SquareParams::default()).is_empty());
        let g = filter_segments(&square_sides(100., 100., 15., 0.), &FilterCriteria::default());
        assert!(assemble_squares(&g, &SquareParams::default()).is_empty());
    }

    #[test]
    fn channel_argmax() {
        assert_eq!(color_of([200, 10, 10], 10), Ok(BlockColor::Red));
        assert_eq!(color_of([10, 10, 200], 10), Ok(BlockColor::Blue));
        assert_eq!(color_of([10, 200, 10], 10), Ok(BlockColor::Green));
        assert!(matches!(color_of([100, 100, 50], 10), Err(DetectError::AmbiguousColor { .. })));
        assert!(matches!(color_of([105, 96, 50], 10), Err(DetectError::AmbiguousColor { .. })));
        assert_eq!(color_of([106, 96, 50], 10), Ok(BlockColor::Red));
    }

    #[test]
    fn median_ignores_single_outlier() {
        let mut img = Image::filled(9, 9, [200, 10, 10]).unwrap();
        img.set(4, 4, [10, 10, 250]);
        let q = Quad::axis_square(2.0, 2.0, 4.0);
        assert_eq!(classify_color(&img, &q, &ColorRule::default()), Ok(BlockColor::Red));
        let single = ColorRule {
            single_pixel: true,
            ..ColorRule::default()
        };
        assert_eq!(classify_color(&img, &q, &single), Ok(BlockColor::Blue));
    }
}
