use serde::{Deserialize, Serialize};

use super::point::Point2;
use super::GeometryError;
use crate::scalar::Real;

/// A finite line segment with distinct endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Segment<T> {
    pub p1: Point2<T>,
    pub p2: Point2<T>,
}

/// Where two supporting lines cross, and at what acute angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineCrossing<T> {
    pub point: Point2<T>,
    /// Acute angle between the two lines in degrees, in `(0, 90]`.
    pub angle: T,
}

impl<T: Real> Segment<T> {
    pub fn new(p1: Point2<T>, p2: Point2<T>) -> Result<Self, GeometryError> {
        if p1 == p2 {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(Self { p1, p2 })
    }

    /// Builds a segment from raw coordinates. Panics if the endpoints coincide.
    pub fn from_coords(x1: T, y1: T, x2: T, y2: T) -> Self {
        Self::new(Point2::new(x1, y1), Point2::new(x2, y2)).expect("distinct endpoints")
    }

    #[inline]
    pub fn direction(&self) -> Point2<T> {
        self.p2 - self.p1
    }

    #[inline]
    pub fn length(&self) -> T {
        self.direction().norm()
    }

    pub fn midpoint(&self) -> Point2<T> {
        self.p1.lerp(self.p2, T::lit(0.5))
    }

    /// Undirected orientation in degrees, in `[0, 180)`.
    pub fn orientation_deg(&self) -> T {
        let d = self.direction();
        let mut a = d.y.atan2(d.x).to_degrees();
        if a < T::zero() {
            a = a + T::lit(180.0);
        }
        if a >= T::lit(180.0) {
            a = a - T::lit(180.0);
        }
        a
    }

    /// Deviation from horizontal in degrees, in `[0, 90]`.
    pub fn deviation_from_horizontal(&self) -> T {
        let a = self.orientation_deg();
        a.min(T::lit(180.0) - a)
    }

    /// Deviation from vertical in degrees, in `[0, 90]`.
    pub fn deviation_from_vertical(&self) -> T {
        (self.orientation_deg() - T::lit(90.0)).abs()
    }

    /// Position of the orthogonal projection of `p` on the supporting line, as a
    /// fraction of the segment (0 at `p1`, 1 at `p2`).
    pub fn project_param(&self, p: Point2<T>) -> T {
        let d = self.direction();
        (p - self.p1).dot(d) / d.dot(d)
    }

    pub fn distance_to_point(&self, p: Point2<T>) -> T {
        let t = self.project_param(p).max(T::zero()).min(T::one());
        p.distance(self.p1.lerp(self.p2, t))
    }

    /// Perpendicular distance from `p` to the infinite supporting line.
    pub fn line_distance(&self, p: Point2<T>) -> T {
        self.direction().cross(p - self.p1).abs() / self.length()
    }

    /// Minimum distance between the two finite segments (zero when they cross).
    pub fn distance_to_segment(&self, other: &Self) -> T {
        if proper_or_touching_cross(self, other) {
            return T::zero();
        }
        self.distance_to_point(other.p1)
            .min(self.distance_to_point(other.p2))
            .min(other.distance_to_point(self.p1))
            .min(other.distance_to_point(self.p2))
    }

    /// Distance of the nearer endpoint to `p`.
    pub fn endpoint_distance(&self, p: Point2<T>) -> T {
        self.p1.distance(p).min(self.p2.distance(p))
    }

    pub fn cast<U: Real>(&self) -> Segment<U> {
        Segment {
            p1: self.p1.cast(),
            p2: self.p2.cast(),
        }
    }
}

fn proper_or_touching_cross<T: Real>(a: &Segment<T>, b: &Segment<T>) -> bool {
    let d1 = a.direction().cross(b.p1 - a.p1);
    let d2 = a.direction().cross(b.p2 - a.p1);
    let d3 = b.direction().cross(a.p1 - b.p1);
    let d4 = b.direction().cross(a.p2 - b.p1);
    let z = T::zero();
    ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z))
}

/// Crossing of the supporting lines of `a` and `b`, accepted only when the
/// crossing lies within `extension` pixels of both finite segments.
///
/// Returns `None` for (near-)parallel lines, `|sin| < 1e-9`.
pub fn segment_intersection<T: Real>(
    a: &Segment<T>,
    b: &Segment<T>,
    extension: T,
) -> Option<LineCrossing<T>> {
    let da = a.direction();
    let db = b.direction();
    let la = da.norm();
    let lb = db.norm();
    let denom = da.cross(db);
    let sin = denom.abs() / (la * lb);
    if sin < T::lit(1e-9) {
        return None;
    }
    let t = (b.p1 - a.p1).cross(db) / denom;
    let point = a.p1 + da.scale(t);
    let slack = T::lit(1e-9) * (T::one() + extension);
    if a.distance_to_point(point) > extension + slack || b.distance_to_point(point) > extension + slack {
        return None;
    }
    let cos = (da.dot(db) / (la * lb)).abs().min(T::one());
    let angle = cos.acos().to_degrees();
    Some(LineCrossing {
        point,
        angle: angle.max(T::lit(1e-12)),
    })
}

/// Crossing of two infinite lines, `None` if parallel.
pub fn line_intersection<T: Real>(a: &Segment<T>, b: &Segment<T>) -> Option<Point2<T>> {
    let da = a.direction();
    let db = b.direction();
    let denom = da.cross(db);
    if denom.abs() / (da.norm() * db.norm()) < T::lit(1e-9) {
        return None;
    }
    let t = (b.p1 - a.p1).cross(db) / denom;
    Some(a.p1 + da.scale(t))
}

pub fn is_right_angle<T: Real>(angle_deg: T, tol_deg: T) -> bool {
    (angle_deg - T::lit(90.0)).abs() <= tol_deg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> Segment<f64> {
        Segment::from_coords(x1, y1, x2, y2)
    }

    #[test]
    fn axis_aligned_cross() {
        let c = segment_intersection(&seg(0., 0., 10., 0.), &seg(5., -5., 5., 5.), 0.0).unwrap();
        assert_eq!(c.point, Point2::new(5.0, 0.0));
        assert!((c.angle - 90.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_lines_do_not_cross() {
        assert!(segment_intersection(&seg(0., 0., 10., 0.), &seg(0., 1., 10., 1.), 100.0).is_none());
    }

    #[test]
    fn crossing_beyond_endpoint_needs_extension() {
        let a = seg(0., 0., 4., 0.);
        let b = seg(5., -5., 5., 5.);
        assert!(segment_intersection(&a, &b, 0.0).is_none());
        assert!(segment_intersection(&a, &b, 0.9).is_none());
        let c = segment_intersection(&a, &b, 2.0).unwrap();
        assert!((c.point.x - 5.0).abs() < 1e-12 && c.point.y.abs() < 1e-12);
    }

    #[test]
    fn acute_angle_reported() {
        let c = segment_intersection(&seg(0., 0., 10., 0.), &seg(0., 0., 10., 10.), 0.0).unwrap();
        assert!((c.angle - 45.0).abs() < 1e-9);
        let c = segment_intersection(&seg(0., 0., 10., 0.), &seg(10., 10., 0., 0.), 0.0).unwrap();
        assert!((c.angle - 45.0).abs() < 1e-9);
    }

    #[test]
    fn right_angle_tolerance() {
        assert!(is_right_angle(90.0, 10.0));
        assert!(!is_right_angle(79.9, 10.0));
        assert!(is_right_angle(81.0, 10.0));
    }

    #[test]
    fn segment_distances() {
        let a = seg(0., 0., 10., 0.);
        assert_eq!(a.distance_to_segment(&seg(5., -1., 5., 1.)), 0.0);
        assert!((a.distance_to_segment(&seg(13., 0., 13., 5.)) - 3.0).abs() < 1e-12);
        assert!((a.distance_to_point(Point2::new(5.0, 4.0)) - 4.0).abs() < 1e-12);
        assert!((a.line_distance(Point2::new(50.0, -2.0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn orientation_is_undirected() {
        assert!((seg(0., 0., 10., 10.).orientation_deg() - 45.0).abs() < 1e-9);
        assert!((seg(10., 10., 0., 0.).orientation_deg() - 45.0).abs() < 1e-9);
        assert!((seg(0., 0., 0., 5.).deviation_from_vertical()).abs() < 1e-9);
        assert!((seg(0., 0., 10., -1.).deviation_from_horizontal() - 5.710593).abs() < 1e-5);
    }

    #[test]
    fn degenerate_segment_rejected() {
        let p = Point2::new(1.0, 1.0);
        assert_eq!(Segment::new(p, p), Err(GeometryError::DegenerateSegment));
    }
}
