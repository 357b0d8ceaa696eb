//! Progressive probabilistic Hough transform.
//!
//! Edge pixels are visited in a seeded random order. Each visited pixel votes
//! into a `(rho, theta)` accumulator; when its best bin reaches the threshold
//! the supporting line is walked from the pixel in both directions, stopping
//! after more than `max_line_gap` consecutive misses. The walked pixels are
//! removed from the edge set (and their votes withdrawn if the run is long
//! enough to be emitted).

use serde::{Deserialize, Serialize};

use super::{EdgeMap, RasterError};
use crate::geometry::{Point2, Segment};
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct HoughParams {
    /// Accumulator distance resolution in pixels.
    pub distance_resolution: f64,
    /// Accumulator angle resolution in radians.
    pub angle_resolution: f64,
    pub accumulator_threshold: u32,
    pub min_line_length: f64,
    pub max_line_gap: u32,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            distance_resolution: 1.0,
            angle_resolution: std::f64::consts::PI / 180.0,
            accumulator_threshold: 20,
            min_line_length: 15.0,
            max_line_gap: 5,
        }
    }
}

impl HoughParams {
    pub fn validate(&self) -> Result<(), RasterError> {
        let ok = self.distance_resolution > 0.0
            && self.angle_resolution > 0.0
            && self.accumulator_threshold > 0
            && self.min_line_length > 0.0
            && self.max_line_gap > 0;
        if ok {
            Ok(())
        } else {
            Err(RasterError::InvalidParams("hough parameters must be positive"))
        }
    }
}

const SHIFT: u32 = 16;

/// Detects line segments in `edges`. Identical inputs and seed give identical output.
pub fn ppht(edges: &EdgeMap, p: &HoughParams, seed: u64) -> Vec<Segment<f64>> {
    let (w, h) = (edges.width(), edges.height());
    let num_angle = ((std::f64::consts::PI / p.angle_resolution).round() as usize).max(1);
    let num_rho = ((((w + h) * 2 + 1) as f64 / p.distance_resolution).round() as usize).max(1);
    let rho_offset = (num_rho - 1) / 2;
    let irho = 1.0 / p.distance_resolution;
    let trig: Vec<(f64, f64)> = (0..num_angle)
        .map(|n| {
            let t = n as f64 * p.angle_resolution;
            (t.cos() * irho, t.sin() * irho)
        })
        .collect();

    let mut mask: Vec<bool> = edges.as_raw().to_vec();
    let mut voted = vec![false; w * h];
    let mut accum = vec![0i32; num_angle * num_rho];
    let mut points: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| edges.get(x, y))
        .collect();

    let bin = |n: usize, x: usize, y: usize| -> Option<usize> {
        let (c, s) = trig[n];
        let r = (x as f64 * c + y as f64 * s).round() as i64 + rho_offset as i64;
        (r >= 0 && (r as usize) < num_rho).then(|| n * num_rho + r as usize)
    };

    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::new();
    let min_len = p.min_line_length;
    let gap_limit = p.max_line_gap;

    let mut count = points.len();
    while count > 0 {
        let idx = rng.below(count as u64) as usize;
        let (px, py) = points[idx];
        points[idx] = points[count - 1];
        count -= 1;
        if !mask[py * w + px] {
            continue;
        }

        let mut max_val = 0;
        let mut max_n = 0;
        for n in 0..num_angle {
            if let Some(b) = bin(n, px, py) {
                accum[b] += 1;
                if accum[b] > max_val {
                    max_val = accum[b];
                    max_n = n;
                }
            }
        }
        voted[py * w + px] = true;
        if (max_val as u32) < p.accumulator_threshold {
            continue;
        }

        let seed_pt = (px as f64, py as f64);
        let (c, sn) = trig[max_n];
        let first = walk_run(&mask, &LineWalk::new((c, sn), seed_pt), w, h, gap_limit);
        let run = match fit_direction(&first.hits) {
            Some(dir) => {
                let refined = walk_run(&mask, &LineWalk::new((dir.1, -dir.0), seed_pt), w, h, gap_limit);
                if refined.hits.len() >= first.hits.len() {
                    refined
                } else {
                    first
                }
            }
            None => first,
        };

        // A run that bridges two nearby lines fits neither, so it is first
        // trimmed to the pixels of its dominant line. The emitted segment
        // must lie on edge pixels for at least `MIN_COVERAGE` of its raster:
        // the fit is tried, then the fitted and walked directions anchored at
        // the seed pixel, then the extreme pixels, then each of those with
        // its ends moved to the best-covered neighbouring pixels, and last
        // the run with isolated end clusters peeled off.
        let line = run.trimmed(seed_pt);
        let fitted = fit_direction(&line.hits).unwrap_or(line.dir);
        let candidates = [
            line.endpoints(),
            line.endpoints_through(seed_pt, fitted),
            line.endpoints_through(seed_pt, line.dir),
            line.extreme_pixels(),
        ];
        let seed_only = (Point2::new(px as f64, py as f64), Point2::new(px as f64, py as f64));
        let strict = |&(a, b): &(Point2<f64>, Point2<f64>)| coverage(edges, a, b) >= MIN_COVERAGE;
        let (a, b) = candidates
            .iter()
            .copied()
            .find(strict)
            .or_else(|| candidates.iter().map(|&(a, b)| snapped(edges, a, b)).find(strict))
            .or_else(|| line.peeled().into_iter().flat_map(|r| [r.endpoints(), r.extreme_pixels()]).find(strict))
            .unwrap_or(seed_only);
        let good = a.distance(b) >= min_len;
        // An emitted line takes only its own pixels; pixels trimmed off stay
        // available to other lines.
        let taken = if good { &line.hits } else { &run.hits };
        for &(x, y) in taken {
            let i = y * w + x;
            if good && voted[i] {
                for n in 0..num_angle {
                    if let Some(bi) = bin(n, x, y) {
                        accum[bi] -= 1;
                    }
                }
            }
            mask[i] = false;
        }
        if good {
            if let Ok(seg) = Segment::new(a, b) {
                out.push(seg);
            }
        }
    }
    out
}

// Fixed-point DDA along a line direction, starting at a pixel.
struct LineWalk {
    x_major: bool,
    x0: i64,
    y0: i64,
    dx: i64,
    dy: i64,
}

impl LineWalk {
    fn new((cos, sin): (f64, f64), (px, py): (f64, f64)) -> Self {
        let (a, b) = (-sin, cos);
        let one = (1i64 << SHIFT) as f64;
        let fixed = |v: f64| ((v + 0.5) * one).floor() as i64;
        if a.abs() > b.abs() {
            Self {
                x_major: true,
                x0: px.round() as i64,
                y0: fixed(py),
                dx: if a > 0.0 { 1 } else { -1 },
                dy: (b * one / a.abs()).round() as i64,
            }
        } else {
            Self {
                x0: fixed(px),
                y0: py.round() as i64,
                x_major: false,
                dx: (a * one / b.abs()).round() as i64,
                dy: if b > 0.0 { 1 } else { -1 },
            }
        }
    }

    fn direction(&self) -> (f64, f64) {
        let one = (1i64 << SHIFT) as f64;
        let (x, y) = if self.x_major {
            (self.dx as f64, self.dy as f64 / one)
        } else {
            (self.dx as f64 / one, self.dy as f64)
        };
        let n = x.hypot(y);
        (x / n, y / n)
    }

    /// Pixels along the line starting at the origin pixel, until the border.
    fn steps(&self, reverse: bool, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let sign = if reverse { -1 } else { 1 };
        let (dx, dy) = (self.dx * sign, self.dy * sign);
        (0i64..)
            .map(move |k| {
                let (x, y) = (self.x0 + k * dx, self.y0 + k * dy);
                if self.x_major {
                    (x, y >> SHIFT)
                } else {
                    (x >> SHIFT, y)
                }
            })
            .take_while(move |&(x, y)| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h)
            .map(|(x, y)| (x as usize, y as usize))
    }
}

// Edge pixels collected along one line walk.
struct Run {
    hits: Vec<(usize, usize)>,
    dir: (f64, f64),
}

impl Run {
    // Extreme hits projected onto the least-squares line through all hits.
    fn endpoints(&self) -> (Point2<f64>, Point2<f64>) {
        let n = self.hits.len() as f64;
        let (sx, sy) = self.hits.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64, b + y as f64));
        let c = Point2::new(sx / n, sy / n);
        let dir = fit_direction(&self.hits).unwrap_or(self.dir);
        let d = Point2::new(dir.0, dir.1);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &self.hits {
            let t = (Point2::new(x as f64, y as f64) - c).dot(d);
            lo = lo.min(t);
            hi = hi.max(t);
        }
        let snap = |p: Point2<f64>| Point2::new((p.x * 8.0).round() / 8.0, (p.y * 8.0).round() / 8.0);
        (snap(c + d.scale(lo)), snap(c + d.scale(hi)))
    }

    // Hits within `TRIM_DIST` of the fitted line through `origin`, refitted
    // to the inliers a few times. Anchoring at the seed pixel keeps the line
    // on one edge when the run has picked up a parallel neighbour.
    fn trimmed(&self, origin: (f64, f64)) -> Run {
        let mut keep = self.hits.clone();
        let mut anchor = origin;
        for _ in 0..3 {
            let Some(d) = fit_direction(&keep) else { break };
            let next: Vec<_> = self
                .hits
                .iter()
                .copied()
                .filter(|&(x, y)| ((x as f64 - anchor.0) * d.1 - (y as f64 - anchor.1) * d.0).abs() <= TRIM_DIST)
                .collect();
            if next.len() < 3 || next == keep {
                break;
            }
            let n = next.len() as f64;
            let (sx, sy) = next.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64, b + y as f64));
            anchor = (sx / n, sy / n);
            keep = next;
        }
        Run { hits: keep, dir: self.dir }
    }

    // Centers of the two hits farthest apart along the fitted line.
    fn extreme_pixels(&self) -> (Point2<f64>, Point2<f64>) {
        let d = fit_direction(&self.hits).unwrap_or(self.dir);
        let key = |&&(x, y): &&(usize, usize)| x as f64 * d.0 + y as f64 * d.1;
        let lo = self.hits.iter().min_by(|a, b| key(a).total_cmp(&key(b)));
        let hi = self.hits.iter().max_by(|a, b| key(a).total_cmp(&key(b)));
        match (lo, hi) {
            (Some(&(x0, y0)), Some(&(x1, y1))) => (Point2::new(x0 as f64, y0 as f64), Point2::new(x1 as f64, y1 as f64)),
            _ => (Point2::new(0.0, 0.0), Point2::new(0.0, 0.0)),
        }
    }

    // Successively shorter runs, each dropping the smaller end cluster of
    // the previous one, where clusters are separated by gaps along the line.
    fn peeled(&self) -> Vec<Run> {
        let Some(d) = fit_direction(&self.hits) else { return Vec::new() };
        let mut sorted: Vec<(f64, (usize, usize))> =
            self.hits.iter().map(|&(x, y)| (x as f64 * d.0 + y as f64 * d.1, (x, y))).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut clusters: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for (t, p) in sorted {
            if t - last > 2.0 || clusters.is_empty() {
                clusters.push(Vec::new());
            }
            clusters.last_mut().expect("pushed").push(p);
            last = t;
        }
        let mut out = Vec::new();
        let (mut lo, mut hi) = (0, clusters.len());
        while hi - lo > 1 {
            if clusters[lo].len() <= clusters[hi - 1].len() {
                lo += 1;
            } else {
                hi -= 1;
            }
            let hits: Vec<_> = clusters[lo..hi].concat();
            if hits.len() >= 3 {
                out.push(Run { hits, dir: self.dir });
            }
        }
        out
    }

    // Extreme hits projected onto the line through `origin` along `dir`.
    fn endpoints_through(&self, origin: (f64, f64), dir: (f64, f64)) -> (Point2<f64>, Point2<f64>) {
        let c = Point2::new(origin.0, origin.1);
        let d = Point2::new(dir.0, dir.1);
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for &(x, y) in &self.hits {
            let t = (Point2::new(x as f64, y as f64) - c).dot(d);
            lo = lo.min(t);
            hi = hi.max(t);
        }
        (c + d.scale(lo), c + d.scale(hi))
    }
}

const MIN_COVERAGE: f64 = 0.7;
const TRIM_DIST: f64 = 1.0;

// Fraction of the segment's raster pixels that are edge pixels.
fn coverage(edges: &EdgeMap, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let px = rasterize_segment(a, b);
    let on = px
        .iter()
        .filter(|&&(x, y)| x >= 0 && y >= 0 && (x as usize) < edges.width() && (y as usize) < edges.height())
        .filter(|&&(x, y)| edges.get(x as usize, y as usize))
        .count();
    on as f64 / px.len().max(1) as f64
}

// The segment between pixel centers within one pixel of `a` and `b` whose
// raster best covers the edges. Digital lines with nearly the same ends can
// still disagree on every other pixel.
fn snapped(edges: &EdgeMap, a: Point2<f64>, b: Point2<f64>) -> (Point2<f64>, Point2<f64>) {
    let (a, b) = (Point2::new(a.x.round(), a.y.round()), Point2::new(b.x.round(), b.y.round()));
    let mut best = (coverage(edges, a, b), a, b);
    for k in 0..81 {
        let off = |i: u32| f64::from((k / 3u32.pow(i)) % 3) - 1.0;
        let (p, q) = (Point2::new(a.x + off(0), a.y + off(1)), Point2::new(b.x + off(2), b.y + off(3)));
        let c = coverage(edges, p, q);
        if c > best.0 {
            best = (c, p, q);
        }
    }
    (best.1, best.2)
}

// Walks both ways from the origin, accepting edge pixels within one pixel of
// the line across its minor axis, until more than `gap_limit` steps miss.
fn walk_run(mask: &[bool], walk: &LineWalk, w: usize, h: usize, gap_limit: u32) -> Run {
    let mut hits = Vec::new();
    for reverse in [false, true] {
        let mut gap = 0;
        let mut pending = Vec::new();
        for (k, (x, y)) in walk.steps(reverse, w, h).enumerate() {
            if reverse && k == 0 {
                continue;
            }
            let before = pending.len();
            for off in [0i64, -1, 1] {
                let (cx, cy) = if walk.x_major {
                    (x as i64, y as i64 + off)
                } else {
                    (x as i64 + off, y as i64)
                };
                if cx < 0 || cy < 0 || cx as usize >= w || cy as usize >= h {
                    continue;
                }
                let (cx, cy) = (cx as usize, cy as usize);
                if mask[cy * w + cx] {
                    pending.push((cx, cy));
                }
            }
            if pending.len() > before {
                gap = 0;
                hits.append(&mut pending);
            } else {
                gap += 1;
                if gap > gap_limit {
                    break;
                }
            }
        }
    }
    let dir = walk.direction();
    Run { hits, dir }
}

// Principal direction of a pixel set, if it has extent.
fn fit_direction(pts: &[(usize, usize)]) -> Option<(f64, f64)> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64, b + y as f64));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let (dx, dy) = (x as f64 - mx, y as f64 - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx + syy == 0.0 {
        return None;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some((theta.cos(), theta.sin()))
}

/// Integer pixels of the segment `a`-`b` (Bresenham, endpoints rounded),
/// ordered from `a`. Ties break the same way whichever end comes first.
pub fn rasterize_segment(a: Point2<f64>, b: Point2<f64>) -> Vec<(i64, i64)> {
    let pa = (a.x.round() as i64, a.y.round() as i64);
    let pb = (b.x.round() as i64, b.y.round() as i64);
    if pb < pa {
        let mut pts = bresenham(pb, pa);
        pts.reverse();
        return pts;
    }
    bresenham(pa, pb)
}

fn bresenham((mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64)) -> Vec<(i64, i64)> {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut pts = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        pts.push((x0, y0));
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
    pts
}
