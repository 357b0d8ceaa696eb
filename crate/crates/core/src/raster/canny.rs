use serde::{Deserialize, Serialize};

use super::{gaussian_blur, EdgeMap, GrayImage, RasterError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct CannyParams {
    pub blur_sigma: f64,
    /// Sobel gradient magnitude (L2) below which nothing is an edge.
    pub low_threshold: f64,
    /// Sobel gradient magnitude (L2) at or above which a maximum seeds an edge.
    pub high_threshold: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            blur_sigma: 1.4,
            low_threshold: 50.0,
            high_threshold: 150.0,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<(), RasterError> {
        let ok = self.blur_sigma >= 0.0
            && self.low_threshold >= 0.0
            && self.low_threshold <= self.high_threshold
            && self.high_threshold.is_finite();
        if ok {
            Ok(())
        } else {
            Err(RasterError::InvalidParams("canny thresholds/sigma"))
        }
    }
}

/// Raw 3x3 Sobel responses with replicated borders.
pub fn sobel(img: &GrayImage) -> (Vec<i32>, Vec<i32>) {
    let (w, h) = (img.width(), img.height());
    let px = |x: i64, y: i64| -> i32 {
        img.get(x.clamp(0, w as i64 - 1) as usize, y.clamp(0, h as i64 - 1) as usize) as i32
    };
    let mut gx = vec![0i32; w * h];
    let mut gy = vec![0i32; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let (a, b, c) = (px(x - 1, y - 1), px(x, y - 1), px(x + 1, y - 1));
            let (d, f) = (px(x - 1, y), px(x + 1, y));
            let (g, hh, i) = (px(x - 1, y + 1), px(x, y + 1), px(x + 1, y + 1));
            let idx = y as usize * w + x as usize;
            gx[idx] = (c + 2 * f + i) - (a + 2 * d + g);
            gy[idx] = (g + 2 * hh + i) - (a + 2 * b + c);
        }
    }
    (gx, gy)
}

/// L2 Sobel gradient magnitude per pixel.
pub fn sobel_magnitude(img: &GrayImage) -> Vec<f64> {
    let (gx, gy) = sobel(img);
    gx.iter()
        .zip(gy.iter())
        .map(|(&x, &y)| ((x as i64 * x as i64 + y as i64 * y as i64) as f64).sqrt())
        .collect()
}

/// Canny edge detector: Gaussian smoothing, Sobel gradient, non-maximum
/// suppression over four direction bins, and 8-connected hysteresis.
///
/// Everything after the blur runs on integers (squared magnitudes), so the
/// result is bit-stable under a constant gray offset.
pub fn canny(img: &GrayImage, p: &CannyParams) -> EdgeMap {
    let blurred = gaussian_blur(img, p.blur_sigma);
    let (w, h) = (img.width(), img.height());
    let (gx, gy) = sobel(&blurred);
    let mag2: Vec<i64> = gx
        .iter()
        .zip(gy.iter())
        .map(|(&x, &y)| x as i64 * x as i64 + y as i64 * y as i64)
        .collect();
    // Thresholds compared in the squared domain: m >= t  <=>  m^2 >= ceil(t^2).
    let low2 = (p.low_threshold * p.low_threshold).ceil() as i64;
    let high2 = (p.high_threshold * p.high_threshold).ceil() as i64;

    let at = |x: i64, y: i64| -> i64 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0
        } else {
            mag2[y as usize * w + x as usize]
        }
    };

    // 0 = none, 1 = weak, 2 = strong
    let mut class = vec![0u8; w * h];
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            let m = mag2[idx];
            if m < low2.max(1) {
                continue;
            }
            let (dx, dy) = gradient_bin(gx[idx], gy[idx]);
            let (xi, yi) = (x as i64, y as i64);
            let before = at(xi - dx, yi - dy);
            let after = at(xi + dx, yi + dy);
            if m > before && m >= after {
                if m >= high2 {
                    class[idx] = 2;
                    stack.push(idx);
                } else {
                    class[idx] = 1;
                }
            }
        }
    }

    let mut edges = vec![false; w * h];
    for &i in &stack {
        edges[i] = true;
    }
    while let Some(idx) = stack.pop() {
        let (x, y) = ((idx % w) as i64, (idx / w) as i64);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if class[n] == 1 && !edges[n] {
                    edges[n] = true;
                    stack.push(n);
                }
            }
        }
    }
    EdgeMap::from_raw(w, h, edges).expect("dimensions preserved")
}

// Neighbor offset along the gradient, quantized to 0/45/90/135 degrees.
// Bin edges at 22.5 and 67.5 degrees, compared on integers scaled by 1e6.
fn gradient_bin(gx: i32, gy: i32) -> (i64, i64) {
    let (ax, ay) = ((gx as i64).abs(), (gy as i64).abs());
    const T1: i64 = 414_214; // tan(22.5 deg) * 1e6
    const T2: i64 = 2_414_214; // tan(67.5 deg) * 1e6
    if ay * 1_000_000 <= ax * T1 {
        (1, 0)
    } else if ay * 1_000_000 >= ax * T2 {
        (0, 1)
    } else if (gx >= 0) == (gy >= 0) {
        (1, 1)
    } else {
        (1, -1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(w: usize, h: usize, lo: u8, hi: u8) -> GrayImage {
        GrayImage::from_fn(w, h, |x, _| if x < w / 2 { lo } else { hi }).unwrap()
    }

    #[test]
    fn constant_image_has_no_edges() {
        for v in [0u8, 77, 255] {
            let e = canny(&GrayImage::filled(32, 24, v).unwrap(), &CannyParams::default());
            assert!(e.is_empty());
        }
    }

    #[test]
    fn step_gives_single_column() {
        let p = CannyParams {
            low_threshold: 50.0,
            high_threshold: 100.0,
            ..CannyParams::default()
        };
        let e = canny(&step(40, 30, 0, 255), &p);
        let cols: Vec<usize> = (0..40).filter(|&x| (0..30).any(|y| e.get(x, y))).collect();
        assert_eq!(cols.len(), 1, "edge columns {cols:?}");
        assert!(cols[0] == 19 || cols[0] == 20);
        assert!((0..30).all(|y| e.get(cols[0], y)));
    }

    #[test]
    fn weak_step_below_high_threshold() {
        // Sobel response to a 10-level step is at most 4 * 10 = 40.
        let img = step(40, 30, 100, 110);
        let max = sobel_magnitude(&img).into_iter().fold(0.0, f64::max);
        assert_eq!(max, 40.0);
        let p = CannyParams {
            low_threshold: 50.0,
            high_threshold: 100.0,
            ..CannyParams::default()
        };
        assert!(canny(&img, &p).is_empty());
    }

    #[test]
    fn direction_bins() {
        assert_eq!(gradient_bin(10, 0), (1, 0));
        assert_eq!(gradient_bin(0, -10), (0, 1));
        assert_eq!(gradient_bin(10, 10), (1, 1));
        assert_eq!(gradient_bin(-10, -10), (1, 1));
        assert_eq!(gradient_bin(10, -10), (1, -1));
    }

    #[test]
    fn invalid_params() {
        let p = CannyParams {
            low_threshold: 200.0,
            high_threshold: 100.0,
            ..CannyParams::default()
        };
        assert!(p.validate().is_err());
        assert!(CannyParams::default().validate().is_ok());
    }
}
