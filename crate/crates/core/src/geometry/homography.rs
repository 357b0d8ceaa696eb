use super::point::{mean_point, Point2};
use super::quad::Quad;
use super::GeometryError;
use crate::scalar::Real;

/// Projective map of the plane, `p' ~ M p` in homogeneous coordinates.
///
/// Stored scale-normalized so that `m[2][2] == 1` whenever it is nonzero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography<T> {
    m: [[T; 3]; 3],
}

impl<T: Real> Homography<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    pub fn translation(dx: T, dy: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, dx], [z, o, dy], [z, z, o]],
        }
    }

    /// Builds from a raw matrix. Fails if the matrix is (near) singular.
    pub fn from_matrix(m: [[T; 3]; 3]) -> Result<Self, GeometryError> {
        let h = Self { m }.normalized();
        if h.determinant().abs() <= T::lit(1e-12) {
            return Err(GeometryError::SingularSystem);
        }
        Ok(h)
    }

    pub fn matrix(&self) -> [[T; 3]; 3] {
        self.m
    }

    fn normalized(mut self) -> Self {
        let s = self.m[2][2];
        if s != T::zero() && s != T::one() {
            for row in &mut self.m {
                for v in row.iter_mut() {
                    *v = *v / s;
                }
            }
        }
        self
    }

    pub fn determinant(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Result<Self, GeometryError> {
        let m = &self.m;
        let det = self.determinant();
        if det.abs() <= T::lit(1e-300).max(T::min_positive_value()) {
            return Err(GeometryError::SingularSystem);
        }
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let mut inv = adj;
        for row in &mut inv {
            for v in row.iter_mut() {
                *v = *v / det;
            }
        }
        Ok(Self { m: inv }.normalized())
    }

    /// `self` applied after `other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut out = [[T::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).fold(T::zero(), |acc, k| acc + self.m[i][k] * other.m[k][j]);
            }
        }
        Self { m: out }.normalized()
    }

    /// Maps a point. Points on the line at infinity map to non-finite coordinates.
    #[inline]
    pub fn apply(&self, p: Point2<T>) -> Point2<T> {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        Point2::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        )
    }

    pub fn apply_quad(&self, q: &Quad<T>) -> Quad<T> {
        q.map(|p| self.apply(p))
    }
}

/// Solves the 8-unknown direct linear system mapping each corner of `src`
/// onto the same-index corner of `dst`.
///
/// Both point sets are similarity-normalized before solving, and the
/// normalization is folded back into the result.
pub fn homography_from_quads<T: Real>(src: &Quad<T>, dst: &Quad<T>) -> Result<Homography<T>, GeometryError> {
    if has_collinear_triple(&src.corners) || has_collinear_triple(&dst.corners) {
        return Err(GeometryError::SingularSystem);
    }
    let (ns, src_n) = normalize(&src.corners)?;
    let (nd, dst_n) = normalize(&dst.corners)?;

    let mut a = [[T::zero(); 9]; 8];
    for i in 0..4 {
        let (x, y) = (src_n[i].x, src_n[i].y);
        let (u, v) = (dst_n[i].x, dst_n[i].y);
        let (o, z) = (T::one(), T::zero());
        a[2 * i] = [x, y, o, z, z, z, -u * x, -u * y, u];
        a[2 * i + 1] = [z, z, z, x, y, o, -v * x, -v * y, v];
    }
    let h = solve_augmented(a)?;
    let core = Homography {
        m: [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], T::one()]],
    };
    if core.determinant().abs() <= T::lit(1e-12) {
        return Err(GeometryError::SingularSystem);
    }
    let out = nd.inverse()?.compose(&core).compose(&ns);
    if out.determinant().abs() <= T::lit(1e-12) {
        return Err(GeometryError::SingularSystem);
    }
    Ok(out)
}

fn has_collinear_triple<T: Real>(pts: &[Point2<T>; 4]) -> bool {
    let scale = pts
        .iter()
        .flat_map(|a| pts.iter().map(move |b| a.distance(*b)))
        .fold(T::zero(), T::max);
    if scale == T::zero() {
        return true;
    }
    let eps = T::lit(1e-9) * scale * scale;
    for i in 0..4 {
        for j in (i + 1)..4 {
            for k in (j + 1)..4 {
                if (pts[j] - pts[i]).cross(pts[k] - pts[i]).abs() <= eps {
                    return true;
                }
            }
        }
    }
    false
}

// Translate to the centroid and scale so the mean distance is sqrt(2).
fn normalize<T: Real>(pts: &[Point2<T>; 4]) -> Result<(Homography<T>, [Point2<T>; 4]), GeometryError> {
    let c = mean_point(pts);
    let mean_dist = pts.iter().fold(T::zero(), |acc, p| acc + p.distance(c)) / T::lit(4.0);
    if mean_dist <= T::zero() {
        return Err(GeometryError::SingularSystem);
    }
    let s = T::lit(std::f64::consts::SQRT_2) / mean_dist;
    let z = T::zero();
    let h = Homography {
        m: [[s, z, -s * c.x], [z, s, -s * c.y], [z, z, T::one()]],
    };
    Ok((h, pts.map(|p| h.apply(p))))
}

// Gaussian elimination with partial pivoting on an 8x8 system (last column is the rhs).
fn solve_augmented<T: Real>(mut a: [[T; 9]; 8]) -> Result<[T; 8], GeometryError> {
    const N: usize = 8;
    for col in 0..N {
        let pivot = (col..N)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if !(a[pivot][col].abs() > T::lit(1e-10)) {
            return Err(GeometryError::SingularSystem);
        }
        a.swap(col, pivot);
        for row in (col + 1)..N {
            let f = a[row][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for k in col..=N {
                a[row][k] = a[row][k] - f * a[col][k];
            }
        }
    }
    let mut x = [T::zero(); N];
    for row in (0..N).rev() {
        let mut acc = a[row][N];
        for k in (row + 1)..N {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    fn unit() -> Quad<f64> {
        Quad::axis_square(0.0, 0.0, 1.0)
    }

    #[test]
    fn same_quad_gives_identity() {
        let q = Quad::from_ordered([p(3., 4.), p(40., 6.), p(38., 50.), p(1., 45.)]);
        let h = homography_from_quads(&q, &q).unwrap();
        let id = Homography::<f64>::identity().matrix();
        for (r, ir) in h.matrix().iter().zip(id.iter()) {
            for (v, iv) in r.iter().zip(ir.iter()) {
                assert!((v - iv).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shifted_square_is_translation() {
        let dst = Quad::axis_square(5.0, 0.0, 1.0);
        let h = homography_from_quads(&unit(), &dst).unwrap().matrix();
        let expect = Homography::translation(5.0, 0.0).matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert!((h[i][j] - expect[i][j]).abs() < 1e-12, "{i}{j}: {}", h[i][j]);
            }
        }
    }

    #[test]
    fn collinear_corners_are_singular() {
        let bad = Quad::from_ordered([p(0., 0.), p(5., 0.), p(10., 0.), p(0., 10.)]);
        assert_eq!(homography_from_quads(&bad, &unit()), Err(GeometryError::SingularSystem));
        assert_eq!(homography_from_quads(&unit(), &bad), Err(GeometryError::SingularSystem));
    }

    #[test]
    fn inverse_round_trips() {
        let src = Quad::from_ordered([p(120., 40.), p(520., 52.), p(505., 430.), p(130., 441.)]);
        let dst = Quad::axis_square(0.0, 0.0, 400.0);
        let h = homography_from_quads(&src, &dst).unwrap();
        let inv = h.inverse().unwrap();
        let q = p(250.0, 300.0);
        let back = inv.apply(h.apply(q));
        assert!(back.distance(q) < 1e-9);
    }

    #[test]
    fn solves_in_single_precision() {
        let src = Quad::from_ordered([
            Point2::new(10.0f32, 12.0),
            Point2::new(90.0, 8.0),
            Point2::new(95.0, 80.0),
            Point2::new(5.0, 85.0),
        ]);
        let dst = Quad::axis_square(0.0f32, 0.0, 100.0);
        let h = homography_from_quads(&src, &dst).unwrap();
        for (s, d) in src.corners.iter().zip(dst.corners.iter()) {
            assert!(h.apply(*s).distance(*d) < 1e-3);
        }
    }
}
