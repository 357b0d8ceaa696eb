//! Image area reduction: find the target compartment's perimeter and warp it
//! to a square top-down frame.

use serde::{Deserialize, Serialize};

use super::DetectError;
use crate::geometry::{homography_from_quads, line_intersection, warp, Point2};
use crate::raster::{canny, ppht, to_grayscale, CannyParams, HoughParams, Image};
use crate::{LineSegment, Point, Quad};

/// Side of the rectified top-down frame, in pixels.
pub const RECTIFIED_SIZE: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct AreaParams {
    /// Maximum deviation (degrees) of a border line from horizontal/vertical.
    pub border_angle_tol: f64,
    /// Fraction of the image width/height forming each outer border band.
    pub band_fraction: f64,
    /// Shortest accepted border line, as a fraction of the image side it runs along.
    pub min_border_fraction: f64,
}

impl Default for AreaParams {
    fn default() -> Self {
        Self {
            border_angle_tol: 15.0,
            band_fraction: 0.25,
            min_border_fraction: 0.25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Border {
    Top,
    Right,
    Bottom,
    Left,
}

impl Border {
    pub const ALL: [Border; 4] = [Border::Top, Border::Right, Border::Bottom, Border::Left];
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxDetection {
    /// Fitted border lines in top, right, bottom, left order.
    pub perimeter_segments: Vec<LineSegment>,
    pub corners: Quad,
    /// Fraction of the four border lines that were found.
    pub confidence: f64,
}

/// Border lines found by the band rule, keyed by side.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BorderLines {
    pub lines: Vec<(Border, LineSegment)>,
}

impl BorderLines {
    pub fn get(&self, b: Border) -> Option<LineSegment> {
        self.lines.iter().find(|(k, _)| *k == b).map(|(_, s)| *s)
    }

    pub fn segments(&self) -> Vec<LineSegment> {
        self.lines.iter().map(|(_, s)| *s).collect()
    }
}

/// Runs edge detection and line extraction on the camera frame and locates
/// the target area's four corners.
pub fn detect_target_area(
    img: &Image,
    canny_params: &CannyParams,
    hough: &HoughParams,
    area: &AreaParams,
    seed: u64,
) -> Result<BoxDetection, DetectError> {
    let edges = canny(&to_grayscale(img), canny_params);
    let segments = ppht(&edges, hough, seed);
    box_from_segments(&segments, img.width(), img.height(), area)
}

/// Picks the dominant border line in each outer band and intersects them.
pub fn box_from_segments(
    segments: &[LineSegment],
    width: usize,
    height: usize,
    area: &AreaParams,
) -> Result<BoxDetection, DetectError> {
    let borders = select_border_lines(segments, width, height, area);
    let found = borders.lines.len();
    let (Some(top), Some(right), Some(bottom), Some(left)) = (
        borders.get(Border::Top),
        borders.get(Border::Right),
        borders.get(Border::Bottom),
        borders.get(Border::Left),
    ) else {
        return Err(DetectError::IncompletePerimeter {
            found,
            segments: borders.segments(),
        });
    };

    let corner = |a: &LineSegment, b: &LineSegment| line_intersection(a, b);
    let (Some(tl), Some(tr), Some(br), Some(bl)) = (
        corner(&top, &left),
        corner(&top, &right),
        corner(&bottom, &right),
        corner(&bottom, &left),
    ) else {
        return Err(DetectError::IncompletePerimeter {
            found,
            segments: borders.segments(),
        });
    };
    let corners = Quad::from_ordered([tl, tr, br, bl]);
    let margin = 10.0;
    let in_bounds = corners.corners.iter().all(|p| {
        p.x >= -margin && p.y >= -margin && p.x <= width as f64 + margin && p.y <= height as f64 + margin
    });
    if !in_bounds || !corners.is_convex() || corners.area() < 1.0 {
        return Err(DetectError::CornersOutOfBounds { corners });
    }
    Ok(BoxDetection {
        perimeter_segments: vec![top, right, bottom, left],
        corners,
        confidence: found as f64 / 4.0,
    })
}

/// For each border band: the longest segment within the angle tolerance whose
/// midpoint lies in the band, refined by fitting a line through it and any
/// near-collinear companions (the two edges of a painted border line).
pub fn select_border_lines(
    segments: &[LineSegment],
    width: usize,
    height: usize,
    area: &AreaParams,
) -> BorderLines {
    let (w, h) = (width as f64, height as f64);
    let f = area.band_fraction;
    let mut lines = Vec::new();
    for border in Border::ALL {
        let candidates: Vec<&LineSegment> = segments
            .iter()
            .filter(|s| {
                let m = s.midpoint();
                let along = match border {
                    Border::Top | Border::Bottom => w,
                    Border::Left | Border::Right => h,
                };
                if s.length() < area.min_border_fraction * along {
                    return false;
                }
                match border {
                    Border::Top => s.deviation_from_horizontal() <= area.border_angle_tol && m.y < f * h,
                    Border::Bottom => {
                        s.deviation_from_horizontal() <= area.border_angle_tol && m.y > (1.0 - f) * h
                    }
                    Border::Left => s.deviation_from_vertical() <= area.border_angle_tol && m.x < f * w,
                    Border::Right => {
                        s.deviation_from_vertical() <= area.border_angle_tol && m.x > (1.0 - f) * w
                    }
                }
            })
            .collect();
        let Some(best) = candidates
            .iter()
            .copied()
            .max_by(|a, b| a.length().total_cmp(&b.length()))
        else {
            continue;
        };
        let companions: Vec<&LineSegment> = candidates
            .iter()
            .copied()
            .filter(|s| {
                let d_ang = (s.orientation_deg() - best.orientation_deg()).abs();
                let d_ang = d_ang.min(180.0 - d_ang);
                d_ang <= 3.0 && best.line_distance(s.midpoint()) <= 6.0 && s.length() >= 0.3 * best.length()
            })
            .collect();
        lines.push((border, fit_line(&companions, best)));
    }
    BorderLines { lines }
}

// Length-weighted orthogonal regression through the segments' endpoints.
fn fit_line(segs: &[&LineSegment], fallback: &LineSegment) -> LineSegment {
    if segs.len() < 2 {
        return *fallback;
    }
    let mut wsum = 0.0;
    let mut c = Point2::new(0.0, 0.0);
    for s in segs {
        let l = s.length();
        c = c + (s.p1 + s.p2).scale(0.5 * l);
        wsum += l;
    }
    let c = c.scale(1.0 / wsum);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for s in segs {
        let l = s.length();
        for p in [s.p1, s.p2] {
            let d = p - c;
            sxx += l * d.x * d.x;
            sxy += l * d.x * d.y;
            syy += l * d.y * d.y;
        }
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let dir = Point2::new(theta.cos(), theta.sin());
    let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in segs {
        for p in [s.p1, s.p2] {
            let t = (p - c).dot(dir);
            tmin = tmin.min(t);
            tmax = tmax.max(t);
        }
    }
    LineSegment::new(c + dir.scale(tmin), c + dir.scale(tmax)).unwrap_or(*fallback)
}

/// The rectified frame's corner square, `(0,0)`..`(400,400)`.
pub fn rectified_square() -> Quad {
    Quad::axis_square(0.0, 0.0, RECTIFIED_SIZE as f64)
}

/// Warps the target area to the 400x400 top-down frame.
pub fn rectify(img: &Image, area: &BoxDetection) -> Result<Image, DetectError> {
    let h = homography_from_quads(&area.corners, &rectified_square())?;
    Ok(warp(img, &h, RECTIFIED_SIZE, RECTIFIED_SIZE))
}

/// Maps a rectified-frame point back into the camera frame.
pub fn unrectify_point(area: &BoxDetection, p: Point) -> Result<Point, DetectError> {
    let h = homography_from_quads(&rectified_square(), &area.corners)?;
    Ok(h.apply(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> LineSegment {
        LineSegment::from_coords(x1, y1, x2, y2)
    }

    #[test]
    fn four_bands_give_corners() {
        let segs = vec![
            seg(100., 50., 500., 50.),
            seg(520., 60., 520., 420.),
            seg(110., 430., 510., 430.),
            seg(120., 70., 120., 400.),
            seg(300., 200., 340., 200.),
        ];
        let b = box_from_segments(&segs, 640, 480, &AreaParams::default()).unwrap();
        assert_eq!(b.confidence, 1.0);
        let expect = [(120., 50.), (520., 50.), (520., 430.), (120., 430.)];
        for (c, e) in b.corners.corners.iter().zip(expect) {
            assert!(c.distance(Point2::new(e.0, e.1)) < 1e-9);
        }
    }

    #[test]
    fn missing_border_reports_partial_set() {
        let segs = vec![seg(100., 50., 500., 50.), seg(110., 430., 510., 430.), seg(120., 70., 120., 400.)];
        match box_from_segments(&segs, 640, 480, &AreaParams::default()) {
            Err(DetectError::IncompletePerimeter { found, segments }) => {
                assert_eq!(found, 3);
                assert_eq!(segments.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blank_image_has_no_perimeter() {
        let img = Image::filled(640, 480, [255, 255, 255]).unwrap();
        let r = detect_target_area(&img, &CannyParams::default(), &HoughParams::default(), &AreaParams::default(), 0);
        match r {
            Err(DetectError::IncompletePerimeter { found, segments }) => {
                assert_eq!(found, 0);
                assert!(segments.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn double_edge_is_fitted_to_centerline() {
        let a = seg(100., 48.5, 500., 48.5);
        let b = seg(110., 51.5, 490., 51.5);
        let f = fit_line(&[&a, &b], &a);
        assert!((f.midpoint().y - 50.0).abs() < 0.05);
    }

    #[test]
    fn identity_square_rectifies_to_crop() {
        let mut data = Vec::new();
        for y in 0..450usize {
            for x in 0..500usize {
                data.extend_from_slice(&[(x % 256) as u8, (y % 256) as u8, ((x + y) % 256) as u8]);
            }
        }
        let img = Image::from_raw(500, 450, data).unwrap();
        let area = BoxDetection {
            perimeter_segments: vec![],
            corners: rectified_square(),
            confidence: 1.0,
        };
        let out = rectify(&img, &area).unwrap();
        for y in 0..400 {
            for x in 0..400 {
                assert_eq!(out.get(x, y), img.get(x, y));
            }
        }
    }

    #[test]
    fn collinear_corners_fail_rectification() {
        let img = Image::filled(50, 50, [0, 0, 0]).unwrap();
        let area = BoxDetection {
            perimeter_segments: vec![],
            corners: Quad::from_ordered([
                Point2::new(0., 0.),
                Point2::new(10., 0.),
                Point2::new(20., 0.),
                Point2::new(0., 10.),
            ]),
            confidence: 1.0,
        };
        assert!(matches!(
            rectify(&img, &area),
            Err(DetectError::Geometry(crate::geometry::GeometryError::SingularSystem))
        ));
    }
}
