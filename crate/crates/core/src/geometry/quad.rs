use serde::{Deserialize, Serialize};

use super::point::{mean_point, Point2};
use super::GeometryError;
use crate::scalar::Real;

/// Four corners ordered top-left, top-right, bottom-right, bottom-left
/// (clockwise on screen, where y grows downward).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Quad<T> {
    pub corners: [Point2<T>; 4],
}

impl<T: Real> Quad<T> {
    /// Wraps corners that are already in TL, TR, BR, BL order.
    pub fn from_ordered(corners: [Point2<T>; 4]) -> Self {
        Self { corners }
    }

    /// Axis-aligned square with top-left corner at `(x, y)`.
    pub fn axis_square(x: T, y: T, side: T) -> Self {
        Self::from_ordered([
            Point2::new(x, y),
            Point2::new(x + side, y),
            Point2::new(x + side, y + side),
            Point2::new(x, y + side),
        ])
    }

    pub fn top_left(&self) -> Point2<T> {
        self.corners[0]
    }

    /// Shoelace area; positive for screen-clockwise order.
    pub fn signed_area(&self) -> T {
        polygon_signed_area(&self.corners)
    }

    pub fn area(&self) -> T {
        self.signed_area().abs()
    }

    /// Vertex mean.
    pub fn centroid(&self) -> Point2<T> {
        mean_point(&self.corners)
    }

    pub fn side_lengths(&self) -> [T; 4] {
        let c = &self.corners;
        [
            c[0].distance(c[1]),
            c[1].distance(c[2]),
            c[2].distance(c[3]),
            c[3].distance(c[0]),
        ]
    }

    pub fn mean_side(&self) -> T {
        let s = self.side_lengths();
        (s[0] + s[1] + s[2] + s[3]) / T::lit(4.0)
    }

    /// `(max - min) / mean` of the four sides.
    pub fn side_spread(&self) -> T {
        let s = self.side_lengths();
        let max = s.iter().copied().fold(T::neg_infinity(), T::max);
        let min = s.iter().copied().fold(T::infinity(), T::min);
        (max - min) / self.mean_side()
    }

    pub fn is_convex(&self) -> bool {
        let c = &self.corners;
        let mut sign = T::zero();
        for i in 0..4 {
            let a = c[(i + 1) % 4] - c[i];
            let b = c[(i + 2) % 4] - c[(i + 1) % 4];
            let z = a.cross(b);
            if z == T::zero() {
                return false;
            }
            if sign == T::zero() {
                sign = z.signum();
            } else if z.signum() != sign {
                return false;
            }
        }
        true
    }

    /// No two non-adjacent edges cross.
    pub fn is_simple(&self) -> bool {
        let c = &self.corners;
        !(edges_cross(c[0], c[1], c[2], c[3]) || edges_cross(c[1], c[2], c[3], c[0]))
    }

    /// Point-in-polygon for convex quads of either orientation.
    pub fn contains(&self, p: Point2<T>) -> bool {
        let c = &self.corners;
        let mut pos = false;
        let mut neg = false;
        for i in 0..4 {
            let z = (c[(i + 1) % 4] - c[i]).cross(p - c[i]);
            pos |= z > T::zero();
            neg |= z < T::zero();
        }
        !(pos && neg)
    }

    /// Area of the intersection of two convex quads.
    pub fn overlap_area(&self, other: &Self) -> T {
        let clip = if other.signed_area() >= T::zero() {
            other.corners.to_vec()
        } else {
            other.corners.iter().rev().copied().collect()
        };
        let mut poly: Vec<Point2<T>> = self.corners.to_vec();
        for i in 0..clip.len() {
            if poly.is_empty() {
                break;
            }
            let a = clip[i];
            let b = clip[(i + 1) % clip.len()];
            poly = clip_half_plane(&poly, a, b);
        }
        if poly.len() < 3 {
            return T::zero();
        }
        polygon_signed_area(&poly).abs()
    }

    pub fn map(&self, f: impl FnMut(Point2<T>) -> Point2<T>) -> Self {
        Self::from_ordered(self.corners.map(f))
    }

    pub fn cast<U: Real>(&self) -> Quad<U> {
        Quad::from_ordered(self.corners.map(|p| p.cast()))
    }
}

fn polygon_signed_area<T: Real>(pts: &[Point2<T>]) -> T {
    let n = pts.len();
    let mut acc = T::zero();
    for i in 0..n {
        acc = acc + pts[i].cross(pts[(i + 1) % n]);
    }
    acc * T::lit(0.5)
}

fn edges_cross<T: Real>(p1: Point2<T>, p2: Point2<T>, q1: Point2<T>, q2: Point2<T>) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    d1 * d2 < T::zero() && d3 * d4 < T::zero()
}

// Keeps the part of `poly` on the left of a->b in the positive-area sense
// (inside of a positively oriented clip polygon).
fn clip_half_plane<T: Real>(poly: &[Point2<T>], a: Point2<T>, b: Point2<T>) -> Vec<Point2<T>> {
    let inside = |p: Point2<T>| (b - a).cross(p - a) >= T::zero();
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let cur = poly[i];
        let prev = poly[(i + poly.len() - 1) % poly.len()];
        let (ci, pi) = (inside(cur), inside(prev));
        if ci != pi {
            let d = cur - prev;
            let denom = (b - a).cross(d);
            if denom != T::zero() {
                let t = (b - a).cross(a - prev) / denom;
                out.push(prev + d.scale(t));
            }
        }
        if ci {
            out.push(cur);
        }
    }
    out
}

/// Orders four unordered points as TL, TR, BR, BL.
///
/// Points are sorted by angle around their centroid; the start is the point
/// with the smallest `x + y` (ties broken by smaller `y`).
pub fn order_corners<T: Real>(points: [Point2<T>; 4]) -> Result<Quad<T>, GeometryError> {
    let c = mean_point(&points);
    let mut keyed: Vec<(T, Point2<T>)> = points
        .iter()
        .map(|&p| ((p.y - c.y).atan2(p.x - c.x), p))
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    for i in 0..4 {
        let (a, pa) = keyed[i];
        let (b, pb) = keyed[(i + 1) % 4];
        if pa == pb || (i < 3 && (b - a).abs() < T::lit(1e-12)) {
            return Err(GeometryError::DegenerateQuad);
        }
    }
    let start = (0..4)
        .min_by(|&i, &j| {
            let (pi, pj) = (keyed[i].1, keyed[j].1);
            (pi.x + pi.y)
                .partial_cmp(&(pj.x + pj.y))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(pi.y.partial_cmp(&pj.y).unwrap_or(std::cmp::Ordering::Equal))
        })
        .unwrap_or(0);
    let corners = [0, 1, 2, 3].map(|k| keyed[(start + k) % 4].1);
    let quad = Quad::from_ordered(corners);
    if quad.area() < T::one() || !quad.is_simple() || has_collinear_triple(&quad) {
        return Err(GeometryError::DegenerateQuad);
    }
    Ok(quad)
}

fn has_collinear_triple<T: Real>(q: &Quad<T>) -> bool {
    let c = &q.corners;
    (0..4).any(|i| {
        let a = c[(i + 1) % 4] - c[i];
        let b = c[(i + 2) % 4] - c[(i + 1) % 4];
        a.cross(b).abs() <= T::lit(1e-9) * a.norm() * b.norm()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    #[test]
    fn orders_shuffled_axis_square() {
        let q = order_corners([p(10., 10.), p(0., 10.), p(10., 0.), p(0., 0.)]).unwrap();
        assert_eq!(q.corners, [p(0., 0.), p(10., 0.), p(10., 10.), p(0., 10.)]);
        assert!(q.signed_area() > 0.0);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        assert_eq!(
            order_corners([p(0., 0.), p(5., 0.), p(10., 0.), p(3., 0.)]),
            Err(GeometryError::DegenerateQuad)
        );
        assert_eq!(
            order_corners([p(0., 0.), p(5., 5.), p(10., 10.), p(0., 10.)]),
            Err(GeometryError::DegenerateQuad)
        );
    }

    #[test]
    fn overlap_of_offset_squares() {
        let a: Quad<f64> = Quad::axis_square(0.0, 0.0, 10.0);
        let b = Quad::axis_square(5.0, 5.0, 10.0);
        assert!((a.overlap_area(&b) - 25.0).abs() < 1e-9);
        assert!((a.overlap_area(&a) - 100.0).abs() < 1e-9);
        let far = Quad::axis_square(50.0, 50.0, 10.0);
        assert_eq!(a.overlap_area(&far), 0.0);
    }

    #[test]
    fn spread_and_contains() {
        let q = Quad::axis_square(0.0, 0.0, 30.0);
        assert_eq!(q.side_spread(), 0.0);
        assert_eq!(q.mean_side(), 30.0);
        assert!(q.contains(p(15., 15.)));
        assert!(!q.contains(p(31., 15.)));
        assert!(q.is_convex() && q.is_simple());
        let bow = Quad::from_ordered([p(0., 0.), p(10., 10.), p(10., 0.), p(0., 10.)]);
        assert!(!bow.is_simple());
    }
}
